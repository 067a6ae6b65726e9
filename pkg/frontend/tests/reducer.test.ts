/** The view model is a pure fold over the wire events: golden logs from the
 * engine drive ordering, strikethrough, badges, window gating, and replay
 * determinism. */

import { readFileSync } from "node:fs"
import { dirname, join } from "node:path"
import { fileURLToPath } from "node:url"
import { describe, expect, it } from "vitest"

import { authoritativePlan, interruptEnabled, reduce, reduceAll } from "../src/reducer"
import { emptyModel, type WireEvent } from "../src/types"

const here = dirname(fileURLToPath(import.meta.url))

function loadFixture(name: string): WireEvent[] {
	const text = readFileSync(join(here, "fixtures", name), "utf-8")
	return text
		.split("\n")
		.filter((line) => line.trim().length > 0)
		.map((line) => JSON.parse(line) as WireEvent)
}

const PLAN = ["plan-step-0", "plan-step-1", "plan-step-2", "plan-step-3",
	"plan-step-4", "plan-step-5", "terminate"]

describe("scrambled completion order", () => {
	const events = loadFixture("scrambled.jsonl")

	it("presents the transcript strictly index-ordered", () => {
		let model = emptyModel()
		let lastFinal = -1
		for (const event of events) {
			model = reduce(model, event)
			if (event.type === "present_target") {
				expect(event.index).toBe(lastFinal + 1)
				lastFinal = event.index ?? -1
			}
		}
		expect(authoritativePlan(model)).toEqual(PLAN)
	})

	it("strikes through the rejected approximation and shows the replacement", () => {
		const model = reduceAll(events)
		const row = model.transcript.find((candidate) => candidate.index === 2)
		expect(row).toBeDefined()
		expect(row?.approxRejected).toBe(true)
		expect(row?.approx).not.toBe(row?.final)
		expect(row?.final).toBe("plan-step-2")
	})

	it("shows cancelled work greyed in the lanes rather than hidden", () => {
		const model = reduceAll(events)
		const cancelled = model.lanes.filter((bar) => bar.status === "cancelled")
		expect(cancelled.length).toBeGreaterThan(0)
		for (const bar of cancelled) {
			expect(bar.end).not.toBeNull()
		}
	})

	it("computes the perceived latency for each settled pair", () => {
		const model = reduceAll(events)
		for (const row of model.transcript) {
			if (row.approx !== null && row.final !== null && !row.approxRejected) {
				expect(row.perceivedLatency).not.toBeNull()
				expect(row.perceivedLatency!).toBeGreaterThanOrEqual(0)
			}
		}
	})

	it("is a pure fold: replaying yields an identical snapshot", () => {
		const once = reduceAll(events)
		const twice = reduceAll(events)
		expect(twice).toEqual(once)
	})

	it("ignores duplicated frames after a reconnect overlap", () => {
		const duplicated = [...events.slice(0, 40), ...events.slice(20, 40), ...events.slice(40)]
		expect(reduceAll(duplicated)).toEqual(reduceAll(events))
	})

	it("marks termination and closes any window", () => {
		const model = reduceAll(events)
		expect(model.terminated).toBe(true)
		expect(model.openWindow).toBeNull()
		expect(interruptEnabled(model)).toBe(false)
	})
})

describe("empty session", () => {
	it("renders empty lanes and transcript", () => {
		const model = reduceAll([])
		expect(model.lanes).toEqual([])
		expect(model.transcript).toEqual([])
		expect(interruptEnabled(model)).toBe(false)
	})
})

describe("user interrupt inside an open window", () => {
	const events = loadFixture("interrupted.jsonl")

	it("enables the controls exactly while a window is open", () => {
		let model = emptyModel()
		let sawEnabled = false
		for (const event of events) {
			model = reduce(model, event)
			if (model.openWindow) {
				expect(interruptEnabled(model)).toBe(true)
				sawEnabled = true
			} else {
				expect(interruptEnabled(model)).toBe(false)
			}
		}
		expect(sawEnabled).toBe(true)
	})

	it("badges the injected step as user and cancels the pending target bar", () => {
		const model = reduceAll(events)
		const row = model.transcript.find((candidate) => candidate.index === 0)
		expect(row?.badge).toBe("user")
		expect(row?.final).toBe("user-chosen-step")
		const cancelledTarget = model.lanes.find(
			(bar) => bar.kind === "T" && bar.index === 0 && bar.status === "cancelled",
		)
		expect(cancelledTarget).toBeDefined()
	})

	it("keeps the full plan authoritative after the repair", () => {
		const model = reduceAll(events)
		const plan = authoritativePlan(model)
		expect(plan[0]).toBe("user-chosen-step")
		expect(plan[plan.length - 1]).toBe("terminate")
		expect(model.terminated).toBe(true)
	})
})
