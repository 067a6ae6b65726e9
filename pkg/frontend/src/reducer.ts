/** Pure event-fold for the session view: replaying the same stream always
 * yields an identical model. No wall-clock reads, no mutation of inputs. */

import type { ProcessBar, TimelineModel, TranscriptRow, WireEvent } from "./types"
import { emptyModel } from "./types"

function cloneModel(model: TimelineModel): TimelineModel {
	return {
		lanes: model.lanes.map((bar) => ({ ...bar })),
		transcript: model.transcript.map((row) => ({ ...row })),
		openWindow: model.openWindow ? { ...model.openWindow } : null,
		lastSeq: model.lastSeq,
		clock: model.clock,
		terminated: model.terminated,
		streamEnded: model.streamEnded,
	}
}

function runningBar(lanes: ProcessBar[], kind: string, index: number): ProcessBar | undefined {
	for (let i = lanes.length - 1; i >= 0; i--) {
		const bar = lanes[i]
		if (bar.kind === kind && bar.index === index && bar.status === "running") {
			return bar
		}
	}
	return undefined
}

function rowAt(model: TimelineModel, index: number): TranscriptRow {
	let row = model.transcript.find((candidate) => candidate.index === index && candidate.final === null)
	if (!row) {
		row = model.transcript
			.slice()
			.reverse()
			.find((candidate) => candidate.index === index)
	}
	if (!row) {
		row = {
			index,
			approx: null,
			approxAt: null,
			approxRejected: false,
			final: null,
			finalAt: null,
			badge: null,
			perceivedLatency: null,
		}
		model.transcript.push(row)
	}
	return row
}

/** Apply one wire event. Frames at or below lastSeq are duplicates and are
 * ignored, which makes reconnect replays harmless. */
export function reduce(model: TimelineModel, event: WireEvent): TimelineModel {
	if (event.type !== "end_of_stream" && event.seq <= model.lastSeq) {
		return model
	}
	const next = cloneModel(model)
	next.lastSeq = Math.max(next.lastSeq, event.seq)
	if (typeof event.t === "number") {
		next.clock = event.t
	}
	const index = event.index ?? -1
	const t = event.t ?? next.clock

	switch (event.type) {
		case "process_started":
			next.lanes.push({
				kind: event.kind ?? "T",
				index,
				start: t,
				end: null,
				status: "running",
			})
			break
		case "process_finished":
		case "process_cancelled": {
			const bar = runningBar(next.lanes, event.kind ?? "T", index)
			if (bar) {
				bar.end = t
				bar.status = event.type === "process_finished" ? "completed" : "cancelled"
			}
			break
		}
		case "present_approx": {
			const fresh: TranscriptRow = {
				index,
				approx: event.content ?? "",
				approxAt: t,
				approxRejected: false,
				final: null,
				finalAt: null,
				badge: "approximation",
				perceivedLatency: null,
			}
			next.transcript.push(fresh)
			break
		}
		case "present_target": {
			const row = rowAt(next, index)
			row.final = event.content ?? ""
			row.finalAt = t
			if (row.approx !== null) {
				row.perceivedLatency = row.approxAt !== null ? t - row.approxAt : null
				if (row.approx !== row.final) {
					row.approxRejected = true
				}
			}
			if (row.badge !== "user") {
				row.badge = row.approx !== null && !row.approxRejected ? "approximation" : "target"
			}
			break
		}
		case "user_interrupt": {
			const row = rowAt(next, index)
			row.final = event.content ?? ""
			row.finalAt = t
			row.badge = "user"
			if (row.approx !== null && row.approx !== row.final) {
				row.approxRejected = true
			}
			break
		}
		case "window_open":
			next.openWindow = {
				index,
				kind: event.kind === "A" ? "pending_target" : "override",
				openedAt: t,
			}
			break
		case "window_closed":
			if (next.openWindow && next.openWindow.index === index) {
				next.openWindow = null
			}
			break
		case "terminated":
			next.terminated = true
			next.openWindow = null
			break
		case "end_of_stream":
			next.streamEnded = true
			break
		default:
			break
	}
	return next
}

export function reduceAll(events: WireEvent[], initial?: TimelineModel): TimelineModel {
	let model = initial ?? emptyModel()
	for (const event of events) {
		model = reduce(model, event)
	}
	return model
}

/** Interrupt controls are live exactly when a window is open and the plan is
 * still running. */
export function interruptEnabled(model: TimelineModel): boolean {
	return model.openWindow !== null && !model.terminated
}

/** Final authoritative step contents in index order. */
export function authoritativePlan(model: TimelineModel): string[] {
	const byIndex = new Map<number, string>()
	for (const row of model.transcript) {
		if (row.final !== null) {
			byIndex.set(row.index, row.final)
		}
	}
	return [...byIndex.keys()].sort((a, b) => a - b).map((key) => byIndex.get(key) as string)
}
