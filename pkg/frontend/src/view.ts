/** DOM rendering of the timeline model. Pure function of the model plus the
 * override-window duration (for the countdown); no state of its own. */

import { interruptEnabled } from "./reducer"
import type { ProcessBar, TimelineModel } from "./types"

const PX_PER_SECOND = 14

function barDiv(bar: ProcessBar, clock: number): string {
	const end = bar.end ?? clock
	const width = Math.max((end - bar.start) * PX_PER_SECOND, 3)
	const left = bar.start * PX_PER_SECOND
	const title = `${bar.kind}#${bar.index} ${bar.start.toFixed(2)}s → ${
		bar.end === null ? "…" : bar.end.toFixed(2) + "s"
	} (${bar.status})`
	return `<div class="bar ${bar.status}" style="left:${left}px;width:${width}px" title="${title}">${bar.index}</div>`
}

function laneHtml(model: TimelineModel, kind: "A" | "T", label: string): string {
	const bars = model.lanes.filter((bar) => bar.kind === kind)
	return `<div class="lane"><span class="lane-label">${label}</span><div class="lane-track">${bars
		.map((bar) => barDiv(bar, model.clock))
		.join("")}</div></div>`
}

function transcriptHtml(model: TimelineModel): string {
	const rows = model.transcript.map((row) => {
		const badge = row.badge ? `<span class="badge ${row.badge}">${row.badge}</span>` : ""
		const parts: string[] = []
		if (row.approx !== null) {
			parts.push(`<span class="approx${row.approxRejected ? " rejected" : ""}">${row.approx}</span>`)
		}
		const replaced = row.final !== null && (row.approx === null || row.final !== row.approx)
		if (replaced) {
			if (row.approx !== null) parts.push("⇒")
			parts.push(`<span class="final">${row.final}</span>`)
		}
		const latency =
			row.perceivedLatency !== null
				? `<span class="latency">${row.perceivedLatency.toFixed(2)}s wait</span>`
				: row.final === null
					? `<span class="latency pending">waiting…</span>`
					: ""
		return `<li data-index="${row.index}">${badge}<b>#${row.index}</b> ${parts.join(" ")} ${latency}</li>`
	})
	return `<ol class="transcript">${rows.join("")}</ol>`
}

export interface ViewRefs {
	lanes: HTMLElement
	transcript: HTMLElement
	windowPanel: HTMLElement
	interruptButton: HTMLButtonElement
	interruptInput: HTMLInputElement
}

export function render(model: TimelineModel, refs: ViewRefs, windowSeconds: number): void {
	refs.lanes.innerHTML =
		laneHtml(model, "A", "approximation") + laneHtml(model, "T", "target")
	refs.transcript.innerHTML = transcriptHtml(model)
	if (model.openWindow) {
		const kindText =
			model.openWindow.kind === "pending_target"
				? "target still computing — you may take over"
				: `override window (~${windowSeconds.toFixed(0)}s)`
		refs.windowPanel.textContent = `step #${model.openWindow.index}: ${kindText}`
		refs.windowPanel.className = "window open"
	} else {
		refs.windowPanel.textContent = model.terminated ? "plan complete" : "no window open"
		refs.windowPanel.className = "window closed"
	}
	const enabled = interruptEnabled(model) && refs.interruptInput.value.trim().length > 0
	refs.interruptButton.disabled = !enabled
}

export function notice(element: HTMLElement, text: string): void {
	element.textContent = text
	element.classList.add("visible")
	setTimeout(() => element.classList.remove("visible"), 4000)
}
