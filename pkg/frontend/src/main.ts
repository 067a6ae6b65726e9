/** Session console entry point: a small config form creates a session, the
 * event stream drives the reducer, the view re-renders on every event. */

import { advanceSession, sendInterrupt, subscribe } from "./client"
import { reduce } from "./reducer"
import type { TimelineModel, WireEvent } from "./types"
import { emptyModel } from "./types"
import { notice, render, type ViewRefs } from "./view"

function el<T extends HTMLElement>(id: string): T {
	const found = document.getElementById(id)
	if (!found) throw new Error(`missing element #${id}`)
	return found as T
}

export function start(): void {
	const configured = (document.getElementById("base-url") as HTMLInputElement)?.value
	const baseUrl = configured || window.location.origin
	const refs: ViewRefs = {
		lanes: el("lanes"),
		transcript: el("transcript"),
		windowPanel: el("window-panel"),
		interruptButton: el<HTMLButtonElement>("interrupt-send"),
		interruptInput: el<HTMLInputElement>("interrupt-content"),
	}
	const noticeBox = el("notice")
	const form = el<HTMLFormElement>("session-form")

	let model: TimelineModel = emptyModel()
	let sessionId = ""
	let windowSeconds = 1
	let stopStream: (() => void) | null = null

	const repaint = () => render(model, refs, windowSeconds)

	form.addEventListener("submit", async (submitEvent) => {
		submitEvent.preventDefault()
		stopStream?.()
		model = emptyModel()
		repaint()
		const body = {
			config: {
				k: Number(el<HTMLInputElement>("cfg-k").value),
				interrupt_window: Number(el<HTMLInputElement>("cfg-window").value),
			},
			world: {
				n: Number(el<HTMLInputElement>("cfg-n").value),
				accuracy: Number(el<HTMLInputElement>("cfg-accuracy").value),
				seed: Number(el<HTMLInputElement>("cfg-seed").value),
			},
			pacing: {
				scale: Number(el<HTMLInputElement>("cfg-scale").value),
				paused: el<HTMLInputElement>("cfg-paused").checked,
			},
		}
		windowSeconds = body.config.interrupt_window
		const response = await fetch(`${baseUrl}/sessions`, {
			method: "POST",
			headers: { "content-type": "application/json" },
			body: JSON.stringify(body),
		})
		if (!response.ok) {
			notice(noticeBox, `session rejected (${response.status})`)
			return
		}
		sessionId = ((await response.json()) as { id: string }).id
		el("session-id").textContent = sessionId
		const handle = subscribe({
			baseUrl,
			sessionId,
			onEvent: (wireEvent: WireEvent) => {
				model = reduce(model, wireEvent)
				repaint()
			},
			onEnd: () => {
				model = reduce(model, { seq: model.lastSeq, type: "end_of_stream" })
				repaint()
			},
		})
		stopStream = handle.stop.bind(handle)
	})

	refs.interruptInput.addEventListener("input", repaint)
	refs.interruptButton.addEventListener("click", async () => {
		if (!model.openWindow || !sessionId) return
		const index = model.openWindow.index
		const content = refs.interruptInput.value.trim()
		if (!content) return
		try {
			const status = await sendInterrupt(baseUrl, sessionId, index, content)
			if (status === "stale") {
				notice(noticeBox, `interrupt for step #${index} arrived too late (stale)`)
			} else {
				refs.interruptInput.value = ""
			}
		} catch {
			notice(noticeBox, "interrupt failed — check the connection and retry")
		}
		repaint()
	})

	el<HTMLButtonElement>("advance").addEventListener("click", async () => {
		if (sessionId) await advanceSession(baseUrl, sessionId)
	})

	repaint()
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
	start()
} else if (typeof document !== "undefined") {
	document.addEventListener("DOMContentLoaded", start)
}
