/** Session service client: resumable event subscription over a websocket and
 * idempotent interrupt posts. */

import type { WireEvent } from "./types"

export interface SocketLike {
	onmessage: ((event: { data: string }) => void) | null
	onclose: (() => void) | null
	onerror: (() => void) | null
	close(): void
}

export type SocketFactory = (url: string) => SocketLike
export type FetchLike = (url: string, init: {
	method: string
	headers: Record<string, string>
	body: string
}) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>

export interface SubscriptionOptions {
	baseUrl: string
	sessionId: string
	onEvent: (event: WireEvent) => void
	onEnd?: () => void
	socketFactory?: SocketFactory
	/** Delay before reconnecting after a drop, in milliseconds. */
	reconnectDelayMs?: number
	fromSeq?: number
}

function wsUrl(baseUrl: string, sessionId: string, fromSeq: number): string {
	const http = baseUrl.replace(/\/$/, "")
	const ws = http.replace(/^http/, "ws")
	return `${ws}/sessions/${sessionId}/events?from_seq=${fromSeq}`
}

/**
 * Subscribe to a session's event stream. Reconnects transparently with the
 * last delivered sequence number, drops duplicate frames, and calls onEnd at
 * the end-of-stream marker. Returns a handle that stops the subscription.
 */
export function subscribe(options: SubscriptionOptions): { stop(): void; lastSeq(): number } {
	const factory: SocketFactory =
		options.socketFactory ?? ((url) => new WebSocket(url) as unknown as SocketLike)
	const delay = options.reconnectDelayMs ?? 250
	let lastSeq = options.fromSeq ?? 0
	let stopped = false
	let socket: SocketLike | null = null
	let timer: ReturnType<typeof setTimeout> | null = null

	const connect = () => {
		if (stopped) return
		socket = factory(wsUrl(options.baseUrl, options.sessionId, lastSeq))
		socket.onmessage = (message) => {
			const event = JSON.parse(message.data) as WireEvent
			if (event.type === "end_of_stream") {
				stopped = true
				socket?.close()
				options.onEnd?.()
				return
			}
			if (event.seq <= lastSeq) {
				return // duplicate after a reconnect race
			}
			lastSeq = event.seq
			options.onEvent(event)
		}
		const retry = () => {
			if (stopped) return
			timer = setTimeout(connect, delay)
		}
		socket.onclose = retry
		socket.onerror = retry
	}
	connect()

	return {
		stop() {
			stopped = true
			if (timer !== null) clearTimeout(timer)
			socket?.close()
		},
		lastSeq: () => lastSeq,
	}
}

export type InterruptStatus = "accepted" | "stale"

let interruptCounter = 0

export function newIdempotencyKey(): string {
	interruptCounter += 1
	return `int-${Date.now().toString(36)}-${interruptCounter}`
}

/**
 * Post a user interrupt. Network failures retry with the same idempotency
 * key; the service decides acceptance purely from window state, so a repeat
 * of an already-applied interrupt comes back "stale" with no side effects.
 */
export async function sendInterrupt(
	baseUrl: string,
	sessionId: string,
	index: number,
	content: string,
	options: { fetchImpl?: FetchLike; retries?: number; idempotencyKey?: string } = {},
): Promise<InterruptStatus> {
	const fetchImpl = options.fetchImpl ?? (fetch as unknown as FetchLike)
	const retries = options.retries ?? 1
	const key = options.idempotencyKey ?? newIdempotencyKey()
	let attempt = 0
	for (;;) {
		try {
			const response = await fetchImpl(
				`${baseUrl.replace(/\/$/, "")}/sessions/${sessionId}/interrupt`,
				{
					method: "POST",
					headers: { "content-type": "application/json", "idempotency-key": key },
					body: JSON.stringify({ index, content }),
				},
			)
			if (!response.ok) {
				throw new Error(`interrupt rejected with status ${response.status}`)
			}
			const body = (await response.json()) as { status: InterruptStatus }
			return body.status
		} catch (error) {
			attempt += 1
			if (attempt > retries) {
				throw error
			}
		}
	}
}

export async function advanceSession(
	baseUrl: string,
	sessionId: string,
	fetchImpl?: FetchLike,
): Promise<boolean> {
	const impl = fetchImpl ?? (fetch as unknown as FetchLike)
	const response = await impl(`${baseUrl.replace(/\/$/, "")}/sessions/${sessionId}/advance`, {
		method: "POST",
		headers: { "content-type": "application/json" },
		body: "{}",
	})
	const body = (await response.json()) as { resumed: boolean }
	return body.resumed
}
