import init, { qubit_case_study, bloch_state_bound, fidelity_explorer } from "./pkg/qrv_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const fmt = (x) => (x === null ? "inf" : x.toPrecision(4));

function guarded(out, f) {
  try {
    out.classList.remove("error");
    f();
  } catch (e) {
    out.classList.add("error");
    out.textContent = String(e);
  }
}

function plotCaseStudy(view) {
  const canvas = $("cs-plot");
  const g = canvas.getContext("2d");
  const { width, height } = canvas;
  g.clearRect(0, 0, width, height);
  const phis = view.samples.map((s) => s.phi).concat([view.boundary_phi]);
  const lo = Math.min(...phis) - 0.05;
  const hi = Math.max(...phis) + 0.05;
  const x = (phi) => ((phi - lo) / (hi - lo)) * (width - 20) + 10;
  g.strokeStyle = "#888";
  g.setLineDash([4, 4]);
  g.beginPath();
  g.moveTo(x(view.boundary_phi), 0);
  g.lineTo(x(view.boundary_phi), height);
  g.stroke();
  g.setLineDash([]);
  view.samples.forEach((s, i) => {
    const y = 20 + ((i * 37) % (height - 40));
    g.fillStyle = s.robust ? (s.label === 0 ? "#2a6fdb" : "#1b9e5a") : "#d33";
    g.beginPath();
    g.arc(x(s.phi), y, 3, 0, 2 * Math.PI);
    g.fill();
  });
  g.fillStyle = "#444";
  g.fillText("polar angle (rad); red = not robust; dashed = decision boundary", 10, height - 6);
}

function runCaseStudy() {
  const out = $("cs-out");
  guarded(out, () => {
    const view = JSON.parse(
      qubit_case_study(num("cs-theta"), num("cs-noise"), num("cs-n"), num("cs-seed"), num("cs-eps")),
    );
    plotCaseStudy(view);
    out.textContent = [
      `epsilon                  ${fmt(view.epsilon)}`,
      `under-approx. RA (%)     ${fmt(100 * view.under_approx_robust_accuracy)}`,
      `robust accuracy (%)      ${fmt(100 * view.robust_accuracy)}`,
      `non-robust states        ${view.not_robust}`,
      `SDP solves               ${view.sdp_solves}`,
    ].join("\n");
  });
}

function runStateBound() {
  const out = $("sb-out");
  guarded(out, () => {
    const v = JSON.parse(bloch_state_bound(num("sb-x"), num("sb-y"), num("sb-z"), num("sb-theta")));
    out.textContent = [
      `probabilities            ${v.probabilities.map(fmt).join(", ")}`,
      `label                    ${v.label}${v.tie ? " (tie)" : ""}`,
      `margin                   ${fmt(v.margin)}`,
      `certified radius m^2/2   ${fmt(v.lemma_radius)}`,
      `optimal radius           ${fmt(v.delta)}`,
      `nearest adversarial      ${v.nearest_adversarial ? v.nearest_adversarial.map(fmt).join(", ") : "none"}`,
    ].join("\n");
  });
}

function runFidelity() {
  const out = $("fx-out");
  guarded(out, () => {
    const v = JSON.parse(
      fidelity_explorer(num("fx-x1"), num("fx-y1"), num("fx-z1"), num("fx-x2"), num("fx-y2"), num("fx-z2")),
    );
    out.textContent = [
      `fidelity (eigen)         ${v.fidelity.toPrecision(10)}`,
      `fidelity (SDP)           ${v.sdp_fidelity.toPrecision(10)}`,
      `trace distance           ${fmt(v.trace_distance)}`,
      `bounds                   ${fmt(v.lower)} <= T <= ${fmt(v.upper)}`,
    ].join("\n");
  });
}

await init();
$("cs-run").addEventListener("click", runCaseStudy);
$("sb-run").addEventListener("click", runStateBound);
$("fx-run").addEventListener("click", runFidelity);
runCaseStudy();
runStateBound();
runFidelity();
