/** Wire-level and view-model types for the session console. */

export type EventType =
	| "process_started"
	| "process_finished"
	| "process_cancelled"
	| "step_executed"
	| "step_verified"
	| "step_rejected"
	| "present_approx"
	| "present_target"
	| "window_open"
	| "window_closed"
	| "user_interrupt"
	| "terminated"
	| "end_of_stream"

export type Lane = "A" | "T"

/** One frame of the session event stream: the event-log record plus seq. */
export interface WireEvent {
	seq: number
	type: EventType
	t?: number
	index?: number
	kind?: Lane
	content?: string
	tokens?: number
}

export type BarStatus = "running" | "completed" | "cancelled"

/** One process bar in the two-lane timeline. */
export interface ProcessBar {
	kind: Lane
	index: number
	start: number
	end: number | null
	status: BarStatus
}

export type Badge = "approximation" | "target" | "user"

/** One presented row of the serialized transcript. */
export interface TranscriptRow {
	index: number
	/** Approximation proposal as first presented, if one was shown. */
	approx: string | null
	approxAt: number | null
	/** Struck through when the authoritative step replaced it. */
	approxRejected: boolean
	/** Authoritative content once presented or user-injected. */
	final: string | null
	finalAt: number | null
	badge: Badge | null
	/** Gap between the approximation presentation and the authoritative one. */
	perceivedLatency: number | null
}

export type WindowKind = "pending_target" | "override"

export interface OpenWindow {
	index: number
	kind: WindowKind
	openedAt: number
}

/** Pure view state: a fold over the wire events. */
export interface TimelineModel {
	lanes: ProcessBar[]
	transcript: TranscriptRow[]
	openWindow: OpenWindow | null
	lastSeq: number
	clock: number
	terminated: boolean
	streamEnded: boolean
}

export function emptyModel(): TimelineModel {
	return {
		lanes: [],
		transcript: [],
		openWindow: null,
		lastSeq: 0,
		clock: 0,
		terminated: false,
		streamEnded: false,
	}
}
