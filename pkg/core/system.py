"""Experiment runner: builds the model once and dispatches analysis commands"""

import logging
import time
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from core.artifacts import ArtifactWriter, RunManifest, RunStatus, config_hash, coordinate_header
from core.config import CandidateSettings, ExperimentConfig, GridSettings, InitialSettings, ToleranceProfile
from core.dynamics import find_fixed_points, frozen_stationary, integrate_ode, stationary_distribution_power
from core.errors import InvalidParameters, ToolkitError
from core.finite_n import (
    InitialCondition,
    build_lattice_chain,
    evolve_distribution,
    iid_distribution,
    point_mass,
    rate_estimate,
    scaled_relative_entropy,
    simulate_replicas,
    stationary_of_chain,
    sup_deviation,
)
from core.hamiltonian import concavity_probe, duality_check, subsolution_check
from core.lyapunov import (
    LyapunovCandidate,
    custom_candidate,
    descent_check,
    empirical_lambda,
    free_energy_candidate,
    model_candidate,
    positive_definiteness_probe,
    potential_existence_test,
    relative_entropy_candidate,
    slow_adaptation_bounds,
    slow_adaptation_grid_check,
    zero_candidate,
)
from core.reports import FixedPointClass, Verdict
from core.simplex import SimplexGrid, as_array, grid_with_at_least, interior_grid, random_interior
from models import RateFamily, build_model
from tools.expressions import compile_simplex_expression, simplex_symbols
from tools.parallel import parallel_map
from tools.rng import stream

logger = logging.getLogger("lyapunov_toolkit.core.system")

DUALITY_ROUNDTRIP_LIMIT = 1e-6
DUALITY_DUAL1_LIMIT = 1e-8
DUALITY_PRIMAL_LIMIT = 1e-6
FREE_ENERGY_STATE_LIMIT = 2_000


def make_grid(settings: GridSettings, d: int) -> SimplexGrid:
    if settings.resolution is not None:
        return interior_grid(d, settings.resolution, settings.margin)
    return grid_with_at_least(d, settings.min_points, settings.margin)


def make_candidate(settings: CandidateSettings, model: RateFamily, profile: ToleranceProfile,
                   pi_star: Optional[np.ndarray] = None) -> LyapunovCandidate:
    """Candidate J named by the settings; the fd profile forces finite-difference gradients"""
    d = model.dimension
    if settings.kind == "model":
        candidate = model_candidate(model)
    elif settings.kind == "free_energy":
        if model.free_energy_fields is None:
            raise InvalidParameters(f"{model.label} has no Gibbs fields K")
        gradient = model.potential.gradient if model.locally_gibbs and model.potential else None
        candidate = free_energy_candidate(model.free_energy_fields, d, gradient)
    elif settings.kind == "relative_entropy":
        reference = settings.pi_star if settings.pi_star is not None else pi_star
        if reference is None:
            raise InvalidParameters("relative_entropy candidate needs pi_star")
        candidate = relative_entropy_candidate(reference)
    elif settings.kind == "zero":
        candidate = zero_candidate(d)
    else:
        expression = compile_simplex_expression(settings.expression, d)
        partials = [expression.diff(symbol) for symbol in simplex_symbols(d)]
        candidate = custom_candidate(
            expression.at,
            lambda r: np.array([partial.at(r) for partial in partials]),
            label=settings.expression,
            dimension=d,
        )
    if profile == ToleranceProfile.FD:
        candidate = candidate.with_fd_gradient()
    return candidate


def make_initial(settings: InitialSettings, d: int) -> InitialCondition:
    q = settings.q if settings.q is not None else [1.0 / d] * d
    if len(q) != d:
        raise InvalidParameters(f"Initial law q has {len(q)} entries, model has {d} states")
    return InitialCondition(kind=settings.kind, q=tuple(as_array(q).tolist()))


class ExperimentRunner:
    """Owns the validated configuration and the built model; one method per command"""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.jobs = config.jobs
        self._model: Optional[RateFamily] = None
        self.commands: Dict[str, Callable[[ArtifactWriter], Tuple[RunStatus, dict]]] = {
            "simulate-ode": self._simulate_ode,
            "fixed-points": self._fixed_points,
            "stationary": self._stationary,
            "descent": self._descent,
            "check-subsolution": self._check_subsolution,
            "duality": self._duality,
            "concavity": self._concavity,
            "potential-test": self._potential_test,
            "slow-adaptation": self._slow_adaptation,
            "finite-n": self._finite_n,
            "particles": self._particles,
            "landscape": self._landscape,
        }

    @property
    def model(self) -> RateFamily:
        if self._model is None:
            self._model = build_model(self.config.model)
        return self._model

    @property
    def d(self) -> int:
        return self.model.dimension

    def run(self, command: str) -> Tuple[RunManifest, dict]:
        """Run one command; the manifest is written whatever the outcome"""
        if command not in self.commands:
            raise InvalidParameters(f"Unknown command '{command}'")
        manifest = RunManifest(
            command=command,
            config_hash=config_hash(self.config.model_dump(mode="json", by_alias=True)),
            seed=self.config.seed,
        )
        writer = ArtifactWriter(self.config.output_dir, command)
        started = time.perf_counter()
        summary: dict = {}
        logger.info(f"Running {command} (seed {self.config.seed})")
        try:
            manifest.status, summary = self.commands[command](writer)
        except (ToolkitError, ValueError) as e:
            manifest.status = RunStatus.ERROR
            manifest.error = f"{type(e).__name__}: {e}"
            logger.error(f"{command} failed: {manifest.error}")
            raise
        finally:
            manifest.wall_clock_seconds = time.perf_counter() - started
            writer.manifest(manifest)
            logger.info(f"Finished {command} with status {manifest.status.name}")
        return manifest, summary

    def _fixed_point_reports(self):
        return find_fixed_points(self.model, self.config.fixed_points.multistarts, self.config.seed, self.jobs)

    def _stable_fixed_point(self) -> np.ndarray:
        for report in self._fixed_point_reports():
            if report.classification == FixedPointClass.STABLE:
                return report.point.weights
        raise InvalidParameters(f"{self.model.label} has no stable fixed point")

    def _simulate_ode(self, writer: ArtifactWriter):
        settings = self.config.ode
        p0 = settings.p0 if settings.p0 is not None else [1.0 / self.d] * self.d
        trajectory = integrate_ode(self.model, p0, settings.t_end, settings.dt)
        writer.csv("trajectory", coordinate_header(self.d, leading=["t"]), trajectory.rows())
        summary = {"model": self.model.label, "steps": len(trajectory) - 1, "final": trajectory.final}
        writer.json("summary", summary)
        return RunStatus.SUCCESS, summary

    def _fixed_points(self, writer: ArtifactWriter):
        reports = self._fixed_point_reports()
        summary = {"model": self.model.label, "fixed_points": [report.to_dict() for report in reports]}
        writer.json("report", summary)
        return RunStatus.SUCCESS, summary

    def _stationary(self, writer: ArtifactWriter):
        settings = self.config.stationary
        if settings.points is not None:
            points = [as_array(p) for p in settings.points]
        else:
            points = [p.weights for p in make_grid(settings.grid, self.d)]
        laws = parallel_map(lambda r: frozen_stationary(self.model, r), points, self.jobs)
        gap = None
        if settings.cross_check:
            gap = max(float(np.abs(stationary_distribution_power(self.model.rates(r)) - pi).max())
                      for r, pi in zip(points, laws))
        header = coordinate_header(self.d) + [f"pi_{i + 1}" for i in range(self.d)]
        writer.csv("laws", header, np.hstack([np.array(points), np.array(laws)]))
        summary = {"model": self.model.label, "points": len(points), "max_power_iteration_gap": gap}
        writer.json("summary", summary)
        return RunStatus.SUCCESS, summary

    def _descent(self, writer: ArtifactWriter):
        settings = self.config.descent
        rng = stream(self.config.seed, 7)
        starts = [random_interior(self.d, rng, margin=settings.margin) for _ in range(settings.starts)]

        def run_start(p0: np.ndarray):
            trajectory = integrate_ode(self.model, p0, settings.t_end, settings.dt)
            pi_star = trajectory.final
            candidate = make_candidate(settings.candidate, self.model, self.config.tolerance_profile, pi_star)
            report = descent_check(candidate, self.model, trajectory, pi_star, settings.eps, stride=settings.stride)
            return p0, pi_star, report

        results = parallel_map(run_start, starts, self.jobs)
        rows = []
        for index, (p0, pi_star, report) in enumerate(results):
            rows.append([index, *p0, *pi_star, report.violations, report.max_orbital_derivative_outside_ball or 0.0])
        header = (["start"] + [f"p0_{i + 1}" for i in range(self.d)] + [f"final_{i + 1}" for i in range(self.d)]
                  + ["violations", "max_orbital_derivative"])
        writer.csv("starts", header, rows)
        writer.csv("samples", ["t", "value", "orbital_derivative"], results[0][2].rows())

        probes = []
        candidate = None
        for fixed_point in self._fixed_point_reports():
            if fixed_point.classification != FixedPointClass.STABLE:
                continue
            pi_star = fixed_point.point.weights
            candidate = make_candidate(settings.candidate, self.model, self.config.tolerance_profile, pi_star)
            probe = positive_definiteness_probe(candidate, pi_star, settings.probe_radius,
                                                settings.probe_samples, self.config.seed)
            probes.append({"fixed_point": pi_star, **probe.to_dict()})

        violations = sum(report.violations for _, _, report in results)
        summary = {
            "model": self.model.label,
            "candidate": candidate.label if candidate is not None else settings.candidate.kind,
            "starts": len(results),
            "violations": violations,
            "reports": [report.to_dict() for _, _, report in results],
            "positive_definiteness": probes,
        }
        writer.json("report", summary)
        return (RunStatus.SUCCESS if violations == 0 else RunStatus.VERDICT_FAILURE), summary

    def _check_subsolution(self, writer: ArtifactWriter):
        settings = self.config.subsolution
        grid = make_grid(settings.grid, self.d)
        candidate = make_candidate(settings.candidate, self.model, self.config.tolerance_profile)
        report = subsolution_check(self.model, candidate, grid, self.jobs)
        writer.csv("values", coordinate_header(self.d, "H"), np.column_stack([grid.as_array(), report.values]))
        summary = {"model": self.model.label, "candidate": candidate.label, **report.to_dict()}
        writer.json("report", summary)
        failed = report.verdict == Verdict.VIOLATION
        return (RunStatus.VERDICT_FAILURE if failed else RunStatus.SUCCESS), summary

    def _duality(self, writer: ArtifactWriter):
        settings = self.config.duality
        primal = min(settings.primal_samples, settings.samples)
        report = duality_check(self.model, settings.samples, self.config.seed, settings.alpha_scale,
                               primal, self.jobs)
        passed = (report.max_roundtrip_error <= DUALITY_ROUNDTRIP_LIMIT
                  and report.max_dual1_error <= DUALITY_DUAL1_LIMIT
                  and (report.max_primal_gap is None or report.max_primal_gap <= DUALITY_PRIMAL_LIMIT))
        summary = {"model": self.model.label, "passed": passed, **report.to_dict()}
        writer.json("report", summary)
        return (RunStatus.SUCCESS if passed else RunStatus.VERDICT_FAILURE), summary

    def _concavity(self, writer: ArtifactWriter):
        settings = self.config.concavity
        d = self.d
        r = settings.r if settings.r is not None else [1.0 / d] * d
        alpha = settings.alpha if settings.alpha is not None else [0.0] * d
        if settings.w is not None:
            w = settings.w
        else:
            w = np.zeros(d)
            w[0], w[-1] = 1.0, -1.0
        rho = np.linspace(settings.rho_min, settings.rho_max, settings.points)
        report = concavity_probe(self.model, r, alpha, w, rho)
        writer.csv("values", ["rho", "H"], np.column_stack([report.rho, report.values]))
        summary = {"model": self.model.label, **report.to_dict()}
        writer.json("report", summary)
        return (RunStatus.SUCCESS if report.passed else RunStatus.VERDICT_FAILURE), summary

    def _potential_test(self, writer: ArtifactWriter):
        settings = self.config.potential_test
        grid = make_grid(settings.grid, self.d)
        report = potential_existence_test(self.model, grid, settings.h, settings.reconstruct, self.jobs)
        if report.reconstructed is not None:
            writer.csv("potential", coordinate_header(self.d, "U"),
                       np.column_stack([grid.as_array(), report.reconstructed]))
        data = report.to_dict()
        data.pop("reconstructed")
        summary = {"model": self.model.label, **data}
        writer.json("report", summary)
        return (RunStatus.SUCCESS if report.passed else RunStatus.VERDICT_FAILURE), summary

    def _slow_adaptation(self, writer: ArtifactWriter):
        settings = self.config.slow_adaptation
        pi_star = as_array(settings.pi_star) if settings.pi_star is not None else self._stable_fixed_point()
        bounds = slow_adaptation_bounds(self.model, pi_star, settings.lipschitz_samples, self.config.seed)
        grid = make_grid(settings.grid, self.d)
        check_lambda = bounds.lambda_2 / 2
        violations, largest = slow_adaptation_grid_check(self.model, pi_star, check_lambda, grid)
        full_violations, full_largest = slow_adaptation_grid_check(self.model, pi_star, 1.0, grid)
        empirical = empirical_lambda(self.model, pi_star, grid, settings.bisection_tolerance)
        summary = {
            "model": self.model.label,
            "pi_star": pi_star,
            "bounds": bounds.to_dict(),
            "grid_size": len(grid),
            "checked_lambda": check_lambda,
            "violations_at_checked_lambda": violations,
            "max_derivative_at_checked_lambda": largest,
            "violations_at_lambda_1": full_violations,
            "max_derivative_at_lambda_1": full_largest,
            "empirical": {"lambda": empirical, "bisection_tolerance": settings.bisection_tolerance},
        }
        writer.json("report", summary)
        return (RunStatus.SUCCESS if violations == 0 else RunStatus.VERDICT_FAILURE), summary

    def _finite_n(self, writer: ArtifactWriter):
        settings = self.config.finite_n
        chain = build_lattice_chain(self.model, settings.n)
        initial = make_initial(settings.initial, self.d)
        if initial.kind == "iid":
            u0 = iid_distribution(chain, initial.q)
        else:
            u0 = point_mass(chain, initial.q)
        u = evolve_distribution(chain, u0, settings.t, settings.dt, settings.method)
        writer.csv("distribution", coordinate_header(self.d, "mass"), u.rows())
        estimate = rate_estimate(u)
        writer.csv("rate_estimate", coordinate_header(self.d, "J_hat"), estimate.rows())
        summary = {
            "model": self.model.label,
            "n": chain.n,
            "states": len(chain),
            "t": settings.t,
            "mean": u.mean(),
            "missing_rate_estimates": estimate.missing,
        }
        if len(chain) <= FREE_ENERGY_STATE_LIMIT:
            interior = [i for i, k in enumerate(chain.states) if k.min() > 0]
            values = parallel_map(lambda i: scaled_relative_entropy(chain.points[i], u), interior, self.jobs)
            writer.csv("free_energy", coordinate_header(self.d, "F_N"),
                       np.column_stack([chain.points[interior], values]) if interior else [])
        else:
            logger.info(f"Skipping F_t^N table for {len(chain)} states")
        if settings.stationary:
            stationary = stationary_of_chain(chain)
            writer.csv("stationary", coordinate_header(self.d, "mass"), stationary.rows())
            stationary_estimate = rate_estimate(stationary)
            writer.csv("stationary_rate_estimate", coordinate_header(self.d, "J_hat"), stationary_estimate.rows())
            argmin = stationary_estimate.points[int(np.argmin(stationary_estimate.values))]
            summary["stationary_mean"] = stationary.mean()
            summary["stationary_rate_argmin"] = argmin
        writer.json("summary", summary)
        return RunStatus.SUCCESS, summary

    def _particles(self, writer: ArtifactWriter):
        settings = self.config.particles
        initial = make_initial(settings.initial, self.d)
        trajectory = integrate_ode(self.model, initial.q, settings.t_end, settings.ode_dt)
        paths = simulate_replicas(self.model, settings.n, initial, settings.t_end, self.config.seed,
                                  settings.replicas, self.jobs)
        deviations = np.array([sup_deviation(path, trajectory) for path in paths])
        writer.csv("deviations", ["replica", "sup_deviation"],
                   np.column_stack([np.arange(len(paths)), deviations]))
        writer.csv("path", coordinate_header(self.d, leading=["t"]), paths[0].rows())
        within = int((deviations <= settings.threshold).sum())
        quantiles = np.quantile(deviations, [0.05, 0.25, 0.5, 0.75, 0.95])
        summary = {
            "model": self.model.label,
            "n": settings.n,
            "replicas": len(paths),
            "threshold": settings.threshold,
            "within_threshold": within,
            "quantiles": dict(zip(["q05", "q25", "median", "q75", "q95"], quantiles.tolist())),
        }
        writer.json("summary", summary)
        passed = within >= 0.95 * len(paths)
        return (RunStatus.SUCCESS if passed else RunStatus.VERDICT_FAILURE), summary

    def _landscape(self, writer: ArtifactWriter):
        settings = self.config.landscape
        grid = make_grid(settings.grid, self.d)
        candidate = make_candidate(settings.candidate, self.model, self.config.tolerance_profile)
        values = np.array(parallel_map(lambda p: candidate.value(p.weights), grid.points, self.jobs))
        writer.csv("values", coordinate_header(self.d, "J"), np.column_stack([grid.as_array(), values]))
        best = int(np.argmin(values))
        summary = {
            "model": self.model.label,
            "candidate": candidate.label,
            "grid_size": len(grid),
            "min_value": float(values[best]),
            "argmin": grid.points[best],
        }
        writer.json("summary", summary)
        return RunStatus.SUCCESS, summary


def commands() -> List[str]:
    return ["simulate-ode", "fixed-points", "stationary", "descent", "check-subsolution", "duality",
            "concavity", "potential-test", "slow-adaptation", "finite-n", "particles", "landscape"]
