/**
 * Entry point: socket wiring, spring-back joint sliders, drag-to-steer arm
 * view, camera pane (click to retarget), and live plots.
 */

import { SessionStore } from "./app.js";
import { ArmView } from "./arm_view.js";
import { CameraView } from "./camera_view.js";
import { frameOrigins } from "./kinematics.js";
import { drawStrip } from "./plots.js";
import { MessageComposer, parseServerMessage } from "./protocol.js";
import { defaultView } from "./view.js";

const SLIDER_BOUND = 0.5; // rad/s, clamped with a visual cue
const KEEPALIVE_MS = 200; // server TTL is 500 ms; refresh held intents

const store = new SessionStore();
let composer: MessageComposer | null = null;
let socket: WebSocket | null = null;

const el = <T extends HTMLElement>(id: string): T => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
};

const armCanvas = el<HTMLCanvasElement>("arm");
const camCanvas = el<HTMLCanvasElement>("camera");
const errPlot = el<HTMLCanvasElement>("plot-error");
const depthPlot = el<HTMLCanvasElement>("plot-depth");
const vPlot = el<HTMLCanvasElement>("plot-v");
const slidersBox = el<HTMLDivElement>("sliders");
const statusBox = el<HTMLSpanElement>("status");
const readout = el<HTMLSpanElement>("readout");

// UR5-style arms live in the x-z vertical plane; planar presets in x-y.
let view = defaultView(armCanvas.width, armCanvas.height, [1, 0, 0], [0, 0, 1]);
const cameraView = new CameraView(camCanvas);

function send(body: Record<string, unknown>): void {
  if (socket && socket.readyState === WebSocket.OPEN) {
    socket.send(JSON.stringify(body));
  }
}

const armView = new ArmView(
  armCanvas,
  view,
  0.01,
  (joint, vec, gain) => send(composer!.dragIntent(joint, vec, gain)),
  () => send(composer!.zeroIntent(store.hello?.robot.n ?? 6)),
);

function buildSliders(n: number): void {
  slidersBox.innerHTML = "";
  for (let i = 0; i < n; i++) {
    const row = document.createElement("div");
    row.className = "slider-row";
    const label = document.createElement("label");
    label.textContent = `joint ${i + 1}`;
    const input = document.createElement("input");
    input.type = "range";
    input.min = String(-SLIDER_BOUND);
    input.max = String(SLIDER_BOUND);
    input.step = "0.01";
    input.value = "0";
    const value = document.createElement("span");
    value.textContent = "0.00";
    input.addEventListener("input", () => {
      const clamped = store.setSlider(i, parseFloat(input.value), SLIDER_BOUND);
      value.textContent = clamped.toFixed(2);
      value.classList.toggle("clamped", Math.abs(clamped) >= SLIDER_BOUND);
      send(composer!.sliderIntent(store.composedIntent()));
    });
    const release = () => {
      input.value = "0";
      store.releaseSliders();
      value.textContent = "0.00";
      // explicit zero-intent on release, belt and braces with the server TTL
      send(composer!.zeroIntent(n));
      refreshSliderLabels();
    };
    input.addEventListener("pointerup", release);
    input.addEventListener("change", () => {
      if (parseFloat(input.value) === 0) release();
    });
    row.append(label, input, value);
    slidersBox.append(row);
  }
}

function refreshSliderLabels(): void {
  const inputs = slidersBox.querySelectorAll("input");
  inputs.forEach((input, i) => {
    (input as HTMLInputElement).value = String(store.sliderValues[i] ?? 0);
  });
}

camCanvas.addEventListener("click", (ev) => {
  if (!composer || !store.hello) return;
  const rect = camCanvas.getBoundingClientRect();
  const u = ((ev.clientX - rect.left) / rect.width) * store.hello.image_size[0];
  const v = ((ev.clientY - rect.top) / rect.height) * store.hello.image_size[1];
  send(composer.setTarget([u, v]));
});

el<HTMLButtonElement>("btn-pause").addEventListener("click", () =>
  send(composer!.command("pause")));
el<HTMLButtonElement>("btn-resume").addEventListener("click", () =>
  send(composer!.command("resume")));
el<HTMLButtonElement>("btn-reset").addEventListener("click", () =>
  send(composer!.command("reset")));

function connect(): void {
  const url = `ws://${location.host}/ws`;
  socket = new WebSocket(url);
  statusBox.textContent = "connecting";
  socket.onmessage = (ev) => {
    const msg = parseServerMessage(ev.data as string);
    if (!msg) return;
    if (msg.type === "ack" && (msg as { action?: string }).action === "hello") {
      const hello = msg as import("./protocol.js").HelloMessage;
      store.onHello(hello);
      composer = new MessageComposer(hello.session_id);
      cameraView.setImageSize(hello.image_size);
      buildSliders(hello.robot.n);
      statusBox.textContent = `connected (${hello.scenario})`;
    } else if (msg.type === "state") {
      store.onState(msg, performance.now());
    } else if (msg.type === "error") {
      showBanner(msg.message);
    }
  };
  socket.onclose = () => {
    store.onDisconnect();
    refreshSliderLabels();
    statusBox.textContent = "disconnected, retrying";
    setTimeout(connect, 1500);
  };
  socket.onerror = () => socket?.close();
}

function showBanner(message: string): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = message;
  banner.style.display = "block";
  setTimeout(() => (banner.style.display = "none"), 4000);
}

setInterval(() => {
  if (composer && store.hasNonzeroIntent()) {
    send(composer.sliderIntent(store.composedIntent()));
  }
}, KEEPALIVE_MS);

function frame(): void {
  const now = performance.now();
  const stale = store.isStale(now);
  document.body.classList.toggle("stale", stale);
  if (store.hello && store.latest) {
    try {
      armView.render(store.hello.robot.dh, store.latest.q, stale);
    } catch (err) {
      showBanner(String(err));
    }
    cameraView.render(store.latest, store.trail, stale);
    drawStrip(errPlot, store.history, [
      { label: "|e| px", color: "#58a6ff", values: (s) => s.e },
    ]);
    drawStrip(depthPlot, store.history, [
      { label: "z est", color: "#d29922", values: (s) => s.zHat },
      { label: "z true", color: "#2ea043", values: (s) => s.zTrue },
    ]);
    drawStrip(vPlot, store.history, [
      { label: "V (log)", color: "#f85149", values: (s) => s.V },
    ], true);
    const st = store.latest;
    readout.textContent =
      `t=${st.t.toFixed(2)}s  |e|=${Math.hypot(st.e[0], st.e[1]).toFixed(2)}px  ` +
      `z=${st.z_hat.toFixed(2)}/${st.z_true.toFixed(2)}m  V=${st.V.toExponential(2)}` +
      (st.paused ? "  [paused]" : "");
  }
  requestAnimationFrame(frame);
}

connect();
requestAnimationFrame(frame);
