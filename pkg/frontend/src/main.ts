/** Browser entry: wire a RoomClient to the page. */

import { RoomClient } from "./client.js";
import { renderRoom } from "./render.js";

function wsUrl(roomId: string): string {
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  const host = new URLSearchParams(location.search).get("server") ?? location.host;
  return `${scheme}://${host}/ws/${roomId}`;
}

function start(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const params = new URLSearchParams(location.search);
  const roomId = params.get("room");
  const name = params.get("name") ?? "guest";
  const token = params.get("token") ?? undefined;
  if (!roomId) {
    root.textContent = "missing ?room=<room_id> (optional: &name=..., &token=..., &server=host:port)";
    return;
  }
  const client = new RoomClient(wsUrl(roomId), {
    name,
    token,
    onChange: (view) =>
      renderRoom(root, view, {
        onBid: (amount) => client.submitBid(amount),
        onStart: () => client.startRoom(),
        onClose: () => client.closeRoom(),
      }),
  });
  client.connect();
}

start();
