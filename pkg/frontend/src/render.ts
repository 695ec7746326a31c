/**
 * DOM rendering of a ClientView: the live position table with role badges,
 * the bid control, and the settlement panel once the room closes.
 *
 * Rendering is a pure function of the view; every amount shown (minimum,
 * liabilities, transfers) comes straight from server payloads.
 */

import { EntryRow, StatePayload } from "./protocol.js";
import { ClientView } from "./view.js";

export interface RoomActions {
  onBid(amount: number): void;
  onStart?(): void;
  onClose?(): void;
}

function el(tag: string, attrs: Record<string, string> = {}, text?: string): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

function bidButtonDisabled(view: ClientView, rawAmount: string): boolean {
  const state = view.state;
  if (view.status !== "open" || !state || state.phase !== "running") return true;
  if (state.min_next_bid === null) return true;
  const amount = Number(rawAmount);
  return !Number.isFinite(amount) || amount < state.min_next_bid;
}

function positionsTable(state: StatePayload, selfId: string | null): HTMLElement {
  const table = el("table", { id: "positions" });
  const head = el("tr");
  for (const title of ["Position", "Bidder", "Amount", "Roles"]) {
    head.appendChild(el("th", {}, title));
  }
  table.appendChild(el("thead")).appendChild(head);
  const body = el("tbody");
  for (const entry of state.entries) {
    body.appendChild(positionRow(state, entry, selfId));
  }
  table.appendChild(body);
  return table;
}

function positionRow(state: StatePayload, entry: EntryRow, selfId: string | null): HTMLElement {
  const isCatalyst = state.roles.catalyst?.position === entry.position;
  const isRecipient = state.roles.recipient?.position === entry.position;
  const classes = ["position-row"];
  if (isCatalyst) classes.push("catalyst-row");
  if (isRecipient) classes.push("recipient-row");
  if (selfId !== null && entry.bidder === selfId) classes.push("self-row");
  const row = el("tr", { class: classes.join(" "), "data-position": String(entry.position) });
  const selfMark = selfId !== null && entry.bidder === selfId ? " (you)" : "";
  row.appendChild(el("td", {}, `P${entry.position}`));
  row.appendChild(el("td", {}, entry.name + selfMark));
  row.appendChild(el("td", {}, String(entry.amount)));
  const badges = el("td", { class: "badges" });
  if (isCatalyst) badges.appendChild(el("span", { class: "badge catalyst" }, "catalyst"));
  if (isRecipient) badges.appendChild(el("span", { class: "badge recipient" }, "recipient"));
  row.appendChild(badges);
  return row;
}

function liabilityPanel(view: ClientView): HTMLElement {
  const state = view.state as StatePayload;
  const me = view.participantId;
  const panel = el("div", { id: "liability" });
  if (me === null) return panel;
  const net = state.liabilities[me] ?? 0;
  const line = net < 0 ? `if the auction ended now you would pay ${-net}` :
    net > 0 ? `if the auction ended now you would receive ${net}` :
      "you owe nothing right now";
  panel.appendChild(el("div", { class: "liability-net" }, line));
  const catalyst = state.roles.catalyst;
  if (catalyst && catalyst.bidder === me) {
    panel.classList.add("catalyst-warning");
    panel.appendChild(
      el(
        "div",
        { class: "catalyst-note" },
        `you hold the catalyst seat P${catalyst.position}: ` +
          `each bid costs you ${state.alpha} x your listed ${catalyst.amount}`,
      ),
    );
  }
  return panel;
}

function bidPanel(view: ClientView, actions: RoomActions, restoredValue: string): HTMLElement {
  const panel = el("div", { id: "bid-panel" });
  const input = el("input", {
    id: "bid-amount",
    type: "number",
    placeholder: "amount",
  }) as HTMLInputElement;
  input.value = restoredValue;
  const button = el("button", { id: "bid-button" }, "place bid") as HTMLButtonElement;
  button.disabled = bidButtonDisabled(view, input.value);
  input.addEventListener("input", () => {
    button.disabled = bidButtonDisabled(view, input.value);
  });
  button.addEventListener("click", () => {
    const amount = Number(input.value);
    if (!bidButtonDisabled(view, input.value)) actions.onBid(amount);
  });
  panel.appendChild(input);
  panel.appendChild(button);
  if (view.lastError) {
    const text =
      view.lastError.required_minimum !== undefined
        ? `${view.lastError.code}: minimum next bid is ${view.lastError.required_minimum}`
        : `${view.lastError.code}: ${view.lastError.detail}`;
    panel.appendChild(el("div", { id: "bid-error", class: "error" }, text));
  }
  return panel;
}

function settlementPanel(view: ClientView): HTMLElement {
  const settlement = view.settlement;
  const panel = el("div", { id: "settlement" });
  if (!settlement) return panel;
  const state = view.state;
  const winnerName =
    settlement.winner === null
      ? "nobody"
      : state?.members.find((m) => m.participant_id === settlement.winner)?.name ??
        settlement.winner;
  panel.appendChild(
    el("div", { class: "winner" }, `winner: ${winnerName} at ${settlement.winning_amount}`),
  );
  const list = el("ul", { class: "nets" });
  for (const [participant, net] of Object.entries(settlement.net_by_participant).sort()) {
    const name = state?.members.find((m) => m.participant_id === participant)?.name ?? participant;
    list.appendChild(el("li", {}, `${name}: ${net >= 0 ? "+" : ""}${net}`));
  }
  panel.appendChild(list);
  return panel;
}

export function renderRoom(root: HTMLElement, view: ClientView, actions: RoomActions): void {
  const previousInput = root.querySelector<HTMLInputElement>("#bid-amount");
  const restoredValue = previousInput ? previousInput.value : "";
  root.textContent = "";

  if (view.status !== "open") {
    root.appendChild(
      el("div", { id: "connection-banner", class: "banner" }, "disconnected, reconnecting..."),
    );
  }
  const state = view.state;
  if (!state) {
    root.appendChild(el("div", { id: "room-header" }, "waiting for the first state message"));
    return;
  }
  root.appendChild(
    el(
      "div",
      { id: "room-header" },
      `room ${state.room_id} | ${state.phase} | ${state.variant} | alpha ${state.alpha} | ` +
        `catalyst seat P${state.catalyst_index} | recipient seat P${state.recipient_index}`,
    ),
  );
  if (state.min_next_bid !== null) {
    root.appendChild(el("div", { id: "min-next" }, `minimum next bid: ${state.min_next_bid}`));
  }
  root.appendChild(positionsTable(state, view.participantId));
  root.appendChild(liabilityPanel(view));
  if (view.settlement || state.phase === "closed") {
    root.appendChild(settlementPanel(view));
  } else {
    root.appendChild(bidPanel(view, actions, restoredValue));
  }
  if (view.isHost && state.phase !== "closed") {
    root.appendChild(hostPanel(view, actions));
  }
}

function hostPanel(view: ClientView, actions: RoomActions): HTMLElement {
  const state = view.state as StatePayload;
  const panel = el("div", { id: "host-panel" });
  if (state.phase === "lobby") {
    const start = el("button", { id: "start-button" }, "start auction") as HTMLButtonElement;
    start.addEventListener("click", () => actions.onStart?.());
    panel.appendChild(start);
  }
  const close = el("button", { id: "close-button" }, "close auction") as HTMLButtonElement;
  close.addEventListener("click", () => actions.onClose?.());
  panel.appendChild(close);
  return panel;
}
