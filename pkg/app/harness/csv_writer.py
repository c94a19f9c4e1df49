"""CSV emission of sweep results.

Every file starts with '#' comment lines (config hash, norm conventions,
measurement notes) followed by the header row. Floats are written with 17
significant digits so the files round-trip exactly.
"""

import csv
import io
import logging
from pathlib import Path
from typing import Iterable, Optional

from app.models.scenario import SweepResult

logger = logging.getLogger(__name__)

ERRORS_HEADER = ["tau", "t", "err_xi_l2", "err_phi_l2", "err_zeta_l2", "err_v_l2", "err_v_sup"]
ETA_HEADER = ["tau", "t", "eta_h2_sq", "eta_sup"]
ENERGY_HEADER = ["tau", "t", "e_xi", "e_tau_v", "e_phi", "e_zeta", "e_x_xi", "int_e_v_to_t"]
LAYER_HEADER = ["tau", "eta0_h2_sq", "t_star", "fitted_rate", "plateau", "crossed"]
ETA_DT_HEADER = ["tau", "t", "eta_t_h1_sq", "int_eta_t_h1_sq_to_t"]
RELAXED_ENERGY_HEADER = ["t", "f_xi", "f_tilde_xi", "f_x_xi", "f_v", "f_phi", "f_zeta"]
LAYER_TRAJECTORY_HEADER = ["tau", "t", "eta_h2", "quasi_steady_h2", "layer_h2"]

NOTES = {
    "errors.csv": [
        "norms: L2 via Parseval; err_v_sup is the grid max of |v_tau - v_relaxed|",
        "velocity: strong norms only; weak convergence in H^l([0,T],H^(4-l)) is not measured, see int_e_v_to_t in energy.csv",
    ],
    "eta.csv": ["eta_h2_sq uses the Fourier-multiplier convention (1+|k|^2)^2"],
    "energy.csv": [
        "energies use the multi-index convention; e_tau_v = tau^2 * E[v]",
        "int_e_v_to_t: trapezoid of E[v] over the sample times (sampled approximation)",
    ],
    "layer.csv": [
        "layer metric: ||eta - eta_qs||_H2 amplitude (Fourier-multiplier convention), eta_qs the quasi-steady eta",
        "eta0_h2_sq is ||eta||_H2^2 at t=0",
        "fitted_rate and t_star are empty when unavailable",
    ],
    "eta_dt.csv": ["eta_t_h1_sq uses the Fourier-multiplier convention; integral by trapezoid over sample times"],
    "relaxed_energy.csv": ["F family on the relaxed reference; multi-index convention"],
    "layer_trajectory.csv": [
        "H2 amplitudes (Fourier-multiplier convention) after every step up to 16 tau^2, then at sample times",
        "quasi_steady_h2: eta on the slow manifold, -tau^2 (v~_t + k1 v~ . grad v~)",
    ],
}


def fmt(value: Optional[float | bool]) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    return f"{value:.17g}"


def _render(name: str, config_hash: str, header: list[str], rows: Iterable[list[str]]) -> str:
    buffer = io.StringIO()
    buffer.write(f"# config_hash={config_hash}\n")
    for note in NOTES.get(name, []):
        buffer.write(f"# {note}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def render_csv(result: SweepResult) -> dict[str, str]:
    """File name -> file contents for every emitted table."""
    errors_rows, eta_rows, energy_rows, layer_rows, eta_dt_rows, trajectory_rows = [], [], [], [], [], []
    for record in result.records:
        tau = fmt(record.tau)
        for s in record.errors:
            errors_rows.append(
                [tau, fmt(s.t), fmt(s.err_xi_l2), fmt(s.err_phi_l2), fmt(s.err_zeta_l2), fmt(s.err_v_l2), fmt(s.err_v_sup)]
            )
        for s in record.eta:
            eta_rows.append([tau, fmt(s.t), fmt(s.eta_h2_sq), fmt(s.eta_sup)])
        for e, integral in zip(record.energy, record.int_e_v):
            energy_rows.append(
                [tau, fmt(e.t), fmt(e.e_xi), fmt(e.e_tau_v), fmt(e.e_phi), fmt(e.e_zeta), fmt(e.e_x_xi), fmt(integral)]
            )
        for s in record.eta_rate:
            eta_dt_rows.append([tau, fmt(s.t), fmt(s.eta_t_h1_sq), fmt(s.int_eta_t_h1_sq_to_t)])
        for s in record.layer_trajectory:
            trajectory_rows.append([tau, fmt(s.t), fmt(s.eta_h2), fmt(s.quasi_steady_h2), fmt(s.layer_h2)])
        if record.layer is not None:
            layer = record.layer
            layer_rows.append(
                [tau, fmt(record.eta0_h2_sq), fmt(layer.t_star), fmt(layer.fitted_rate), fmt(layer.plateau), fmt(layer.crossed)]
            )

    relaxed_rows = []
    for report in result.relaxed_energy:
        family = report.f_family or {}
        relaxed_rows.append([fmt(report.t)] + [fmt(family.get(key)) for key in RELAXED_ENERGY_HEADER[1:]])

    h = result.config_hash
    return {
        "errors.csv": _render("errors.csv", h, ERRORS_HEADER, errors_rows),
        "eta.csv": _render("eta.csv", h, ETA_HEADER, eta_rows),
        "energy.csv": _render("energy.csv", h, ENERGY_HEADER, energy_rows),
        "layer.csv": _render("layer.csv", h, LAYER_HEADER, layer_rows),
        "eta_dt.csv": _render("eta_dt.csv", h, ETA_DT_HEADER, eta_dt_rows),
        "relaxed_energy.csv": _render("relaxed_energy.csv", h, RELAXED_ENERGY_HEADER, relaxed_rows),
        "layer_trajectory.csv": _render("layer_trajectory.csv", h, LAYER_TRAJECTORY_HEADER, trajectory_rows),
    }


def emit_csv(result: SweepResult, path: str | Path) -> list[Path]:
    """Write every table under the directory ``path``; returns the written files."""
    out_dir = Path(path)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, content in render_csv(result).items():
        target = out_dir / name
        with target.open("w", encoding="utf-8", newline="") as f:
            f.write(content)
        written.append(target)
    logger.info(f"Wrote {len(written)} CSV files to {out_dir}")
    return written


def read_csv(path: str | Path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Parse an emitted file into (comment key/values, rows)."""
    comments: dict[str, str] = {}
    lines = []
    with Path(path).open(encoding="utf-8", newline="") as f:
        for line in f:
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body and " " not in body.split("=", 1)[0]:
                    key, value = body.split("=", 1)
                    comments[key] = value
                continue
            lines.append(line)
    return comments, list(csv.DictReader(lines))
