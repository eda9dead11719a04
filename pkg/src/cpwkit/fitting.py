"""Notch-type S21 synthesis and fitting for side-coupled resonators.

Transmission model (diameter-corrected notch):

    S21(f) = a e^{i alpha} e^{-2 pi i f tau} [1 - (Ql/Qc) e^{i phi} / (1 + 2i Ql (f/f0 - 1))]

with 1/Ql = 1/Qi + 1/Qc, frequencies in GHz and cable delay in ns.  Fits run
in the complex plane (real and imaginary residuals jointly) with an analytic
Jacobian and Levenberg-Marquardt damping; the quality factors are fitted in
log space to keep them positive.  The initial guess is deterministic: baseline
from the trace edges, cable delay from the edge phase slope, f0 at the dip
minimum, Ql from the half-depth width of |S21|^2.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks, peak_widths

from cpwkit.errors import FitError, NoResonanceError, TraceParseError

PARAM_NAMES = ("f0_ghz", "q_internal", "q_coupling", "phi_rad", "amplitude", "phase_rad", "delay_ns")


@dataclass(frozen=True)
class NotchModelParams:
    """Parameters of one notch resonance plus its transmission background."""

    f0_ghz: float
    q_internal: float
    q_coupling: float
    mismatch_phi_rad: float = 0.0
    background_amplitude: float = 1.0
    background_phase_rad: float = 0.0
    cable_delay_ns: float = 0.0

    def __post_init__(self):
        if self.f0_ghz <= 0:
            raise ValueError("resonance frequency must be positive")
        if self.q_internal <= 0 or self.q_coupling <= 0:
            raise ValueError("quality factors must be positive")
        if abs(self.mismatch_phi_rad) >= math.pi / 2:
            raise ValueError("impedance-mismatch angle must satisfy |phi| < pi/2")
        if self.background_amplitude <= 0:
            raise ValueError("background amplitude must be positive")

    @property
    def q_loaded(self) -> float:
        """Loaded quality factor: 1/Ql = 1/Qi + 1/Qc exactly."""
        return 1.0 / (1.0 / self.q_internal + 1.0 / self.q_coupling)

    @property
    def linewidth_mhz(self) -> float:
        return self.f0_ghz * 1e3 / self.q_loaded

    def as_vector(self) -> np.ndarray:
        return np.array(
            [
                self.f0_ghz,
                self.q_internal,
                self.q_coupling,
                self.mismatch_phi_rad,
                self.background_amplitude,
                self.background_phase_rad,
                self.cable_delay_ns,
            ]
        )

    @classmethod
    def from_vector(cls, v) -> "NotchModelParams":
        return cls(
            f0_ghz=float(v[0]),
            q_internal=float(v[1]),
            q_coupling=float(v[2]),
            mismatch_phi_rad=float(v[3]),
            background_amplitude=float(v[4]),
            background_phase_rad=float(v[5]),
            cable_delay_ns=float(v[6]),
        )


@dataclass(frozen=True)
class S21Trace:
    """A transmission trace: strictly increasing frequency grid and complex S21."""

    frequencies_ghz: np.ndarray
    s21: np.ndarray
    metadata: str = ""

    def __post_init__(self):
        f = np.asarray(self.frequencies_ghz, dtype=float)
        s = np.asarray(self.s21, dtype=complex)
        if f.size != s.size:
            raise ValueError("frequency and S21 arrays must have equal length")
        if f.size < 2:
            raise ValueError("a trace needs at least two points")
        if not np.all(np.diff(f) > 0):
            raise ValueError("frequencies must be strictly increasing")
        object.__setattr__(self, "frequencies_ghz", f)
        object.__setattr__(self, "s21", s)

    def __len__(self) -> int:
        return self.frequencies_ghz.size

    def slice(self, lo_ghz: float, hi_ghz: float) -> "S21Trace":
        m = (self.frequencies_ghz >= lo_ghz) & (self.frequencies_ghz <= hi_ghz)
        return S21Trace(self.frequencies_ghz[m], self.s21[m], self.metadata)


def notch_model(vector: np.ndarray, f_ghz: np.ndarray) -> np.ndarray:
    """Complex S21 of the notch model at the given frequencies."""
    f0, qi, qc, phi, amp, alpha, tau = vector
    ql = 1.0 / (1.0 / qi + 1.0 / qc)
    x = f_ghz / f0 - 1.0
    denom = 1.0 + 2j * ql * x
    background = amp * np.exp(1j * alpha) * np.exp(-2j * math.pi * f_ghz * tau)
    return background * (1.0 - (ql / qc) * cmath.exp(1j * phi) / denom)


def notch_model_jacobian(vector: np.ndarray, f_ghz: np.ndarray) -> np.ndarray:
    """Analytic complex Jacobian dS21/dp, shape (n_points, 7).

    Parameter order matches PARAM_NAMES (natural parameters, not log space).
    """
    f0, qi, qc, phi, amp, alpha, tau = vector
    ql = 1.0 / (1.0 / qi + 1.0 / qc)
    x = f_ghz / f0 - 1.0
    denom = 1.0 + 2j * ql * x
    eip = cmath.exp(1j * phi)
    w = (ql / qc) * eip
    background = amp * np.exp(1j * alpha) * np.exp(-2j * math.pi * f_ghz * tau)
    s = background * (1.0 - w / denom)

    dn_dql = -(eip / qc) / denom + w * (2j * x) / denom**2
    dql_dqi = (ql / qi) ** 2
    dql_dqc = (ql / qc) ** 2
    dn_df0 = -w * (2j * ql * f_ghz / f0**2) / denom**2
    dn_dqi = dn_dql * dql_dqi
    dn_dqc = dn_dql * dql_dqc + (ql / qc**2) * eip / denom
    dn_dphi = -1j * w / denom

    jac = np.empty((f_ghz.size, 7), dtype=complex)
    jac[:, 0] = background * dn_df0
    jac[:, 1] = background * dn_dqi
    jac[:, 2] = background * dn_dqc
    jac[:, 3] = background * dn_dphi
    jac[:, 4] = s / amp
    jac[:, 5] = 1j * s
    jac[:, 6] = -2j * math.pi * f_ghz * s
    return jac


def synthesize_s21(
    params: NotchModelParams,
    frequencies_ghz: np.ndarray,
    noise_std: float = 0.0,
    seed: int = 0,
) -> S21Trace:
    """Model trace plus seeded complex Gaussian noise (per quadrature)."""
    f = np.asarray(frequencies_ghz, dtype=float)
    s = notch_model(params.as_vector(), f)
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        s = s + noise_std * (rng.standard_normal(f.size) + 1j * rng.standard_normal(f.size))
    return S21Trace(f, s, metadata=f"synthetic notch f0={params.f0_ghz} GHz seed={seed}")


def multiplexed_synthesize(
    chip_params: list[NotchModelParams],
    band_ghz: tuple[float, float],
    points: int,
    noise_std: float = 0.0,
    seed: int = 0,
) -> S21Trace:
    """Product of the notch responses of many resonators over a shared background.

    The background (amplitude, phase, delay) is taken from the first entry.
    """
    if not chip_params:
        raise ValueError("at least one resonator is required")
    lo, hi = band_ghz
    for p in chip_params:
        if not lo <= p.f0_ghz <= hi:
            raise ValueError(f"resonance {p.f0_ghz} GHz outside band {band_ghz}")
    f = np.linspace(lo, hi, points)
    first = chip_params[0]
    total = np.ones(f.size, dtype=complex)
    for p in chip_params:
        ql = p.q_loaded
        x = f / p.f0_ghz - 1.0
        total *= 1.0 - (ql / p.q_coupling) * cmath.exp(1j * p.mismatch_phi_rad) / (
            1.0 + 2j * ql * x
        )
    background = (
        first.background_amplitude
        * np.exp(1j * first.background_phase_rad)
        * np.exp(-2j * math.pi * f * first.cable_delay_ns)
    )
    s = background * total
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        s = s + noise_std * (rng.standard_normal(f.size) + 1j * rng.standard_normal(f.size))
    return S21Trace(f, s, metadata=f"synthetic multiplexed {len(chip_params)} resonators")


@dataclass
class FitResult:
    """Outcome of one notch fit."""

    params: NotchModelParams
    stderr: dict[str, float]
    covariance: np.ndarray = field(repr=False)
    residual_rms: float
    n_points: int
    window_ghz: tuple[float, float]
    success: bool
    warnings: list[str] = field(default_factory=list)

    @property
    def q_loaded(self) -> float:
        return self.params.q_loaded


def _edge_indices(n: int) -> np.ndarray:
    k = max(3, n // 20)
    return np.concatenate([np.arange(k), np.arange(n - k, n)])


def initial_guess(trace: S21Trace) -> NotchModelParams:
    """Deterministic starting point: edges set the background, the dip sets f0/Ql."""
    f = trace.frequencies_ghz
    s = trace.s21
    n = f.size
    edges = _edge_indices(n)

    # Cable delay from the mean phase slope of the two edge segments.
    k = edges.size // 2
    slopes = []
    for seg in (edges[:k], edges[k:]):
        if seg.size >= 2:
            ph = np.unwrap(np.angle(s[seg]))
            slopes.append(np.polyfit(f[seg], ph, 1)[0])
    slope = float(np.mean(slopes))
    tau = -slope / (2.0 * math.pi)

    s_corr = s * np.exp(2j * math.pi * f * tau)
    amp = float(np.mean(np.abs(s_corr[edges])))
    if amp <= 0:
        raise NoResonanceError("trace has zero baseline amplitude")
    alpha = float(np.angle(np.mean(s_corr[edges] / np.abs(s_corr[edges]))))
    s_norm = s_corr * np.exp(-1j * alpha) / amp

    mag = np.abs(s_norm)
    i_min = int(np.argmin(mag))
    f0 = float(f[i_min])
    depth = 1.0 - float(mag[i_min])
    noise = float(np.std(mag[edges]))
    if depth < max(3.0 * noise, 1e-4):
        raise NoResonanceError(
            f"no dip above the noise floor (depth {depth:.3g}, noise {noise:.3g})"
        )

    # Half-depth width in power.
    level = 0.5 * (1.0 + mag[i_min] ** 2)
    below = mag**2 < level
    i_lo = i_min
    while i_lo > 0 and below[i_lo - 1]:
        i_lo -= 1
    i_hi = i_min
    while i_hi < n - 1 and below[i_hi + 1]:
        i_hi += 1
    width = max(f[i_hi] - f[i_lo], (f[-1] - f[0]) / n)
    ql = f0 / width
    depth = min(depth, 0.999)
    qc = ql / depth
    qi = 1.0 / max(1.0 / ql - 1.0 / qc, 1e-12)
    return NotchModelParams(
        f0_ghz=f0,
        q_internal=qi,
        q_coupling=qc,
        mismatch_phi_rad=0.0,
        background_amplitude=amp,
        background_phase_rad=alpha,
        cable_delay_ns=tau,
    )


def _to_internal(v: np.ndarray) -> np.ndarray:
    u = v.copy()
    u[1] = math.log(v[1])
    u[2] = math.log(v[2])
    u[4] = math.log(v[4])
    return u


def _to_natural(u: np.ndarray) -> np.ndarray:
    v = u.copy()
    v[1] = math.exp(u[1])
    v[2] = math.exp(u[2])
    v[4] = math.exp(u[4])
    return v


def fit_notch(trace: S21Trace, initial: NotchModelParams | None = None) -> FitResult:
    """Damped least-squares fit of the notch model to a complex trace."""
    f = trace.frequencies_ghz
    data = trace.s21
    if len(trace) < 16:
        raise FitError(f"need at least 16 points to fit, got {len(trace)}")
    guess = initial if initial is not None else initial_guess(trace)

    def residual(u):
        s = notch_model(_to_natural(u), f)
        d = s - data
        return np.concatenate([d.real, d.imag])

    def jacobian(u):
        v = _to_natural(u)
        jc = notch_model_jacobian(v, f)
        # chain rule for the log-space quality factors and amplitude
        jc[:, 1] *= v[1]
        jc[:, 2] *= v[2]
        jc[:, 4] *= v[4]
        return np.vstack([jc.real, jc.imag])

    u0 = _to_internal(guess.as_vector())
    result = least_squares(
        residual,
        u0,
        jac=jacobian,
        method="lm",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=4000,
    )
    if not result.success and result.status <= 0:
        raise FitError(
            f"fit did not converge: {result.message}",
            last_params=NotchModelParams.from_vector(_to_natural(result.x)),
        )

    v = _to_natural(result.x)
    params = NotchModelParams.from_vector(v)

    n_res = 2 * f.size
    dof = max(n_res - 7, 1)
    s_sq = 2.0 * result.cost / dof
    j_nat = notch_model_jacobian(v, f)
    j_stack = np.vstack([j_nat.real, j_nat.imag])
    jtj = j_stack.T @ j_stack
    try:
        cov = s_sq * np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        cov = np.full((7, 7), np.nan)
    stderr = {name: float(math.sqrt(abs(cov[i, i]))) for i, name in enumerate(PARAM_NAMES)}

    resid = notch_model(v, f) - data
    rms = float(np.sqrt(np.mean(np.abs(resid) ** 2)))
    depth = params.q_loaded / params.q_coupling * params.background_amplitude
    warn = []
    if depth > 0 and rms > 0.02 * depth:
        noise_est = float(np.std(np.abs(data[_edge_indices(f.size)])))
        if rms > 5.0 * max(noise_est, 1e-12):
            warn.append(
                "residuals far above the noise floor; possible merged or "
                "unresolved resonances in the window"
            )
    return FitResult(
        params=params,
        stderr=stderr,
        covariance=cov,
        residual_rms=rms,
        n_points=f.size,
        window_ghz=(float(f[0]), float(f[-1])),
        success=True,
        warnings=warn,
    )


def find_dips(trace: S21Trace, min_prominence: float | None = None) -> list[int]:
    """Indices of resonance dips in |S21|, most prominent first kept in f order."""
    mag = np.abs(trace.s21)
    baseline = float(np.median(mag))
    edges = _edge_indices(len(trace))
    noise = float(np.std(mag[edges]))
    prominence = (
        min_prominence if min_prominence is not None else max(5.0 * noise, 0.05 * baseline)
    )
    idx, _ = find_peaks(-mag, prominence=prominence)
    return list(idx)


def fit_all_dips(trace: S21Trace, window_linewidths: float = 10.0) -> list[FitResult]:
    """Detect every dip and fit each one on a local window around it.

    Dips whose fit windows overlap a neighbor are flagged as possibly merged;
    a single-notch model cannot separate them cleanly.
    """
    dips = find_dips(trace)
    if not dips:
        raise NoResonanceError("no resonance dips found in the trace")
    mag = np.abs(trace.s21)
    widths, _, _, _ = peak_widths(-mag, dips, rel_height=0.5)
    f = trace.frequencies_ghz
    df = float(np.mean(np.diff(f)))
    results = []
    for k, (center, width_pts) in enumerate(zip(dips, widths)):
        half = window_linewidths * max(width_pts, 3.0) * df
        sub = trace.slice(f[center] - half, f[center] + half)
        if len(sub) < 16:
            lo = max(0, center - 8)
            hi = min(len(trace), center + 8)
            sub = S21Trace(f[lo:hi], trace.s21[lo:hi], trace.metadata)
        fit = fit_notch(sub)
        for other in dips[:k] + dips[k + 1 :]:
            if abs(f[other] - f[center]) < half:
                fit.warnings.append(
                    f"dip at {f[center]:.6f} GHz overlaps a neighbor at "
                    f"{f[other]:.6f} GHz; single-notch fit may be unreliable"
                )
                break
        results.append(fit)
    return results


# ---------------------------------------------------------------------------
# Trace file input


def read_trace(path, fmt: str | None = None) -> S21Trace:
    """Read a Touchstone .s2p (S21 column) or a freq_GHz,re,im CSV trace."""
    path = str(path)
    if fmt is None:
        fmt = "s2p" if path.lower().endswith((".s2p", ".snp")) else "csv"
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if fmt == "s2p":
        return _parse_s2p(text, source=path)
    if fmt == "csv":
        return _parse_trace_csv(text, source=path)
    raise ValueError(f"unknown trace format {fmt!r}")


_FREQ_SCALE_TO_GHZ = {"HZ": 1e-9, "KHZ": 1e-6, "MHZ": 1e-3, "GHZ": 1.0}


def _parse_s2p(text: str, source: str = "<s2p>") -> S21Trace:
    freq_scale = 1.0  # Touchstone default unit is GHz
    data_format = "MA"
    freqs: list[float] = []
    vals: list[complex] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            tokens = line[1:].upper().split()
            for tok in tokens:
                if tok in _FREQ_SCALE_TO_GHZ:
                    freq_scale = _FREQ_SCALE_TO_GHZ[tok]
                elif tok in ("MA", "RI", "DB"):
                    data_format = tok
            continue
        parts = line.split()
        if len(parts) < 9:
            raise TraceParseError(
                f"expected 9 columns (freq + 4 S-parameters), got {len(parts)}",
                line_number=lineno,
            )
        try:
            numbers = [float(p) for p in parts[:9]]
        except ValueError as exc:
            raise TraceParseError(f"bad number: {exc}", line_number=lineno) from None
        fa, s21a, s21b = numbers[0], numbers[3], numbers[4]
        if data_format == "RI":
            s21 = complex(s21a, s21b)
        elif data_format == "MA":
            s21 = s21a * cmath.exp(1j * math.radians(s21b))
        else:  # DB
            s21 = 10.0 ** (s21a / 20.0) * cmath.exp(1j * math.radians(s21b))
        freqs.append(fa * freq_scale)
        vals.append(s21)
    if not freqs:
        raise TraceParseError("no data lines found", line_number=None)
    arr = np.asarray(freqs)
    if not np.all(np.diff(arr) > 0):
        bad = int(np.nonzero(np.diff(arr) <= 0)[0][0]) + 2
        raise TraceParseError("frequency grid is not strictly increasing", line_number=bad)
    return S21Trace(arr, np.asarray(vals), metadata=f"s2p:{source}")


def _parse_trace_csv(text: str, source: str = "<csv>") -> S21Trace:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TraceParseError("empty file", line_number=1) from None
    expected = ["freq_GHz", "re", "im"]
    if [h.strip() for h in header] != expected:
        raise TraceParseError(
            f"header must be {','.join(expected)}, got {','.join(header)}",
            line_number=1,
        )
    freqs: list[float] = []
    vals: list[complex] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise TraceParseError(f"expected 3 columns, got {len(row)}", line_number=lineno)
        try:
            freqs.append(float(row[0]))
            vals.append(complex(float(row[1]), float(row[2])))
        except ValueError as exc:
            raise TraceParseError(f"bad number: {exc}", line_number=lineno) from None
    if not freqs:
        raise TraceParseError("no data rows found", line_number=2)
    arr = np.asarray(freqs)
    if not np.all(np.diff(arr) > 0):
        bad = int(np.nonzero(np.diff(arr) <= 0)[0][0]) + 3
        raise TraceParseError("frequency grid is not strictly increasing", line_number=bad)
    return S21Trace(arr, np.asarray(vals), metadata=f"csv:{source}")


def write_trace_csv(trace: S21Trace, path) -> None:
    """Write a trace in the freq_GHz,re,im dialect read_trace accepts."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["freq_GHz", "re", "im"])
        for f, s in zip(trace.frequencies_ghz, trace.s21):
            writer.writerow([f"{f:.12g}", f"{s.real:.12g}", f"{s.imag:.12g}"])
