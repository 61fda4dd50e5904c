"""Experiment service.

Contains the orchestration behind the CLI:
  - Config loading and cross-field validation (every error reported)
  - Observed-data and pilot generation, memoized in the disk cache
  - Stage-by-stage execution with Σ / δ / θ / proposal handoff
  - Artifact writing (chains, diagnostics, threshold traces, manifest)
"""

import json
import logging
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
from pydantic import BaseModel, ValidationError

from stratabc.cache import get_cache
from stratabc.config import get_settings
from stratabc.exceptions import ConfigError, StratABCError
from stratabc.inference.diagnostics import diagnose_chain, wasserstein_1d, weighted_posterior_summary
from stratabc.inference.models import Chain, ParticlePopulation, ProposalState, ScalingMatrix, StrataSpec
from stratabc.inference.samplers import (
    run_analytic_mcmc,
    run_pm_abc_mcmc,
    run_r_abc_mcmc,
    run_rs_abc_mcmc,
)
from stratabc.inference.smc import SMCIterationRecord, ess_from_log, population_proposal_covariance, run_abc_smc
from stratabc.presets import load_preset
from stratabc.schemas.artifacts import (
    ChainDiagnostics,
    PosteriorSummary,
    RunManifest,
    SMCDiagnostics,
    StageManifest,
)
from stratabc.schemas.experiment import ABC_MCMC, MCMC, ExperimentConfig, StageConfig
from stratabc.simulators.base import ABCProblem, Simulator
from stratabc.simulators.pilot import pilot_prior_predictive
from stratabc.simulators.registry import get_model
from stratabc.streams import Purpose, RandomStream, make_stream

logger = logging.getLogger(__name__)

StageProgress = Callable[[str, int, int], None]

# ---------------------------------------------------------------------------
# Config loading and validation
# ---------------------------------------------------------------------------


def load_config_data(path: Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"config file not found: {path}"])
    try:
        if path.suffix == ".json":
            return json.loads(path.read_text())
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError([f"{path}: {e}"]) from e


def _format_validation_error(error: ValidationError) -> list[str]:
    return [f"{'.'.join(str(p) for p in e['loc']) or '<root>'}: {e['msg']}" for e in error.errors()]


def validate_experiment(config: ExperimentConfig) -> list[str]:
    """Cross-field checks that need the model; returns every violation."""
    errors: list[str] = []
    try:
        model = get_model(config.model.id, **config.model.options)
    except (ConfigError, StratABCError, ValueError) as e:
        return [f"model: {e}"]

    if len(config.model.theta_true) != model.p:
        errors.append(f"model.theta_true: expected {model.p} values, got {len(config.model.theta_true)}")
    errors.extend(f"model.options: {msg}" for msg in model.scheme.validate(model.data_dims))

    names = [s.name for s in config.stages]
    if len(set(names)) != len(names):
        errors.append("stages: stage names must be unique")

    for i, stage in enumerate(config.stages):
        where = f"stages.{i} ({stage.name})"
        first = i == 0
        if stage.burn_in >= stage.n_iter and stage.sampler != "smc":
            errors.append(f"{where}: burn_in must be smaller than n_iter")
        if stage.sampler in ABC_MCMC or stage.sampler == "smc":
            if stage.delta is None and not (stage.sampler == "r" and stage.self_tune) and stage.sampler != "smc":
                errors.append(f"{where}: sampler {stage.sampler!r} needs delta (or self_tune for 'r')")
            if stage.delta == "inherit" and first:
                errors.append(f"{where}: delta cannot be inherited by the first stage")
            if stage.sigma == "inherit" and first:
                errors.append(f"{where}: sigma cannot be inherited by the first stage")
            if stage.sigma == "pilot" and config.pilot is None:
                errors.append(f"{where}: sigma = 'pilot' needs a [pilot] section")
            if isinstance(stage.sigma, list) and len(stage.sigma) != model.n_s:
                errors.append(f"{where}: sigma needs {model.n_s} diagonal entries")
        if stage.sampler == "r" and stage.self_tune and stage.K_burnin > stage.n_iter:
            errors.append(f"{where}: K_burnin exceeds n_iter")
        if stage.sampler == "exchange" and config.model.id != "ising":
            errors.append(f"{where}: the exchange sampler is only available for the ising model")
        if stage.sampler in ("exact", "analytic") and config.model.id != "gaussian":
            errors.append(f"{where}: sampler {stage.sampler!r} is only available for the gaussian model")
        if stage.sampler in MCMC:
            if stage.init is None and first:
                errors.append(f"{where}: the first stage needs init")
            if stage.init == "inherit" and first:
                errors.append(f"{where}: init cannot be inherited by the first stage")
            if isinstance(stage.init, list) and len(stage.init) != model.p:
                errors.append(f"{where}: init needs {model.p} values")
            p = stage.proposal
            given = [p.sd is not None, p.cov is not None, p.inherit]
            if sum(given) > 1:
                errors.append(f"{where}: proposal takes only one of sd, cov, inherit")
            if sum(given) == 0 and first:
                errors.append(f"{where}: proposal needs sd or cov")
            for values in (p.sd, p.cov):
                if values is not None and (len(values) != model.p or any(v <= 0 for v in values)):
                    errors.append(f"{where}: proposal needs {model.p} positive values")
            if p.inherit and first:
                errors.append(f"{where}: proposal cannot be inherited by the first stage")

    if config.sweep is not None:
        if config.sweep.parameter >= model.p:
            errors.append(f"sweep.parameter: model has {model.p} coordinates")
        if config.sweep.low >= config.sweep.high:
            errors.append("sweep: low must be smaller than high")
        if config.sweep.fixed is not None and len(config.sweep.fixed) != model.p:
            errors.append(f"sweep.fixed: expected {model.p} values")
    if config.batch.reference_stage is not None and config.batch.reference_stage not in names:
        errors.append(f"batch.reference_stage: unknown stage {config.batch.reference_stage!r}")
    return errors


def parse_config_data(data: dict[str, Any]) -> ExperimentConfig:
    """Validate a config mapping; raises ConfigError with all problems."""
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(e)) from e
    errors = validate_experiment(config)
    if errors:
        raise ConfigError(errors)
    return config


def parse_config(path: Path) -> ExperimentConfig:
    """Load and validate a TOML or JSON experiment config."""
    return parse_config_data(load_config_data(path))


def load_config(source: str | Path) -> ExperimentConfig:
    """Config from a file path or, failing that, from a preset of that name."""
    path = Path(source)
    if path.is_file() or path.suffix in (".toml", ".json"):
        return parse_config(path)
    return parse_config_data(load_preset(str(source)))


def resolve_output_dir(config: ExperimentConfig, replicate: Optional[int] = None) -> Path:
    out = config.output_dir or Path(config.name)
    if not out.is_absolute():
        out = get_settings().output_root / out
    if replicate is not None:
        out = out / f"replicate_{replicate:03d}"
    return out


# ---------------------------------------------------------------------------
# Observed data and pilot (memoized)
# ---------------------------------------------------------------------------


def _cache_key(kind: str, config: ExperimentConfig, *extra: Any) -> str:
    payload = {
        "model": config.model.model_dump(mode="json", exclude={"observed_file"}),
        "seed": config.seed,
        "extra": list(extra),
    }
    return f"{kind}:{json.dumps(payload, sort_keys=True)}"


def _memoized(key: str, compute: Callable[[], Any]) -> Any:
    if not get_settings().cache_enabled:
        return compute()
    cache = get_cache()
    value = cache.get(key)
    if value is None:
        value = compute()
        cache.set(key, value)
    else:
        logger.info(f"[CACHE] hit for {key.split(':', 1)[0]}")
    return value


def build_problem(config: ExperimentConfig, model: Simulator) -> ABCProblem:
    """Observed dataset from ``observed_file`` or simulated at theta_true."""
    if config.model.observed_file is not None:
        x_star = np.loadtxt(config.model.observed_file)
        if config.model.id == "ising":
            x_star = x_star.astype(np.int8)
        return ABCProblem(model=model, x_star=x_star)

    def compute() -> np.ndarray:
        rng = make_stream(config.seed, Purpose.OBSERVED)
        return model.observe(np.asarray(config.model.theta_true, dtype=float), rng)

    x_star = _memoized(_cache_key("observed", config), compute)
    return ABCProblem(model=model, x_star=np.asarray(x_star))


def build_pilot(config: ExperimentConfig, model: Simulator) -> ScalingMatrix:
    n = config.pilot.n

    def compute() -> np.ndarray:
        return pilot_prior_predictive(model, n, make_stream(config.seed, Purpose.PILOT)).diag

    return ScalingMatrix(_memoized(_cache_key("pilot", config, n), compute))


# ---------------------------------------------------------------------------
# Stage execution
# ---------------------------------------------------------------------------


@dataclass
class StageResult:
    stage: StageConfig
    chain: Optional[Chain] = None
    population: Optional[ParticlePopulation] = None
    smc_trace: list[SMCIterationRecord] = field(default_factory=list)
    snapshots: list[ParticlePopulation] = field(default_factory=list)
    sigma: Optional[ScalingMatrix] = None
    delta: Optional[float] = None
    last_phi: Optional[np.ndarray] = None
    proposal_cov: Optional[np.ndarray] = None
    wall_time: float = 0.0


@dataclass
class RunArtifacts:
    output_dir: Path
    manifest: RunManifest
    results: list[StageResult]

    def path(self, name: str) -> Path:
        return self.output_dir / name


class _PilotHolder:
    """Computes the pilot Σ once, on first use."""

    def __init__(self, config: ExperimentConfig, model: Simulator):
        self._config = config
        self._model = model
        self._sigma: Optional[ScalingMatrix] = None

    def get(self) -> ScalingMatrix:
        if self._sigma is None:
            self._sigma = build_pilot(self._config, self._model)
        return self._sigma


def _resolve_sigma(stage: StageConfig, model: Simulator, prev: Optional[StageResult], pilot: _PilotHolder) -> ScalingMatrix:
    if stage.sigma == "identity":
        return ScalingMatrix.identity(model.n_s)
    if stage.sigma == "pilot":
        return pilot.get()
    if stage.sigma == "inherit":
        if prev is None or prev.sigma is None:
            raise ConfigError([f"stage {stage.name}: no Σ to inherit"])
        return prev.sigma
    return ScalingMatrix(np.asarray(stage.sigma, dtype=float))


def _resolve_delta(stage: StageConfig, prev: Optional[StageResult]) -> Optional[float]:
    if stage.delta == "inherit":
        if prev is None or prev.delta is None:
            raise ConfigError([f"stage {stage.name}: no δ to inherit"])
        return prev.delta
    return stage.delta


def _resolve_init(stage: StageConfig, model: Simulator, prev: Optional[StageResult]) -> np.ndarray:
    if isinstance(stage.init, list):
        return model.to_sampling(np.asarray(stage.init, dtype=float))
    if prev is None or prev.last_phi is None:
        raise ConfigError([f"stage {stage.name}: no initial θ to inherit"])
    return prev.last_phi.copy()


def _resolve_proposal(stage: StageConfig, prev: Optional[StageResult]) -> ProposalState:
    p = stage.proposal
    if p.sd is not None:
        cov = np.diag(np.asarray(p.sd, dtype=float) ** 2)
    elif p.cov is not None:
        cov = np.diag(np.asarray(p.cov, dtype=float))
    elif prev is not None and prev.proposal_cov is not None:
        cov = prev.proposal_cov.copy()
    else:
        raise ConfigError([f"stage {stage.name}: no proposal covariance to inherit"])
    return ProposalState(
        covariance=cov, adapt=p.adapt, adapt_period=p.period, jitter=get_settings().proposal_jitter
    )


def run_stage(
    config: ExperimentConfig,
    index: int,
    problem: ABCProblem,
    prev: Optional[StageResult],
    pilot: _PilotHolder,
    keys: tuple[int, ...],
    progress: Optional[StageProgress] = None,
) -> StageResult:
    """Run one stage and collect what the next stage may inherit."""
    stage = config.stages[index]
    model = problem.model
    rng = make_stream(config.seed, *keys, Purpose.SAMPLER, index)
    index_rng = make_stream(config.seed, *keys, Purpose.INDEX, index)
    on_step = (lambda t, n: progress(stage.name, t, n)) if progress is not None else None
    logger.info(f"[STAGE] {stage.name}: sampler {stage.sampler}, {stage.n_iter} iterations")

    if stage.sampler == "smc":
        return _run_smc_stage(stage, problem, prev, pilot, rng)

    if stage.sampler == "exact":
        from stratabc.simulators.gaussian import GaussianToy

        assert isinstance(model, GaussianToy)
        mean, sd = model.exact_posterior(float(problem.s_star[0]))
        draws = rng.normal(mean, sd, size=(stage.n_iter, 1))
        chain = Chain(
            phi=draws, theta=draws.copy(), log_likelihood=np.full(stage.n_iter, np.nan),
            accepted=np.ones(stage.n_iter, dtype=bool), delta=np.full(stage.n_iter, np.nan),
            parameter_names=model.parameter_names, sampler="exact", burn_in=stage.burn_in,
        )
        return StageResult(stage=stage, chain=chain, last_phi=chain.last_phi)

    init = _resolve_init(stage, model, prev)
    proposal = _resolve_proposal(stage, prev)
    common = dict(proposal=proposal, burn_in=stage.burn_in, progress=on_step)

    if stage.sampler == "exchange":
        from stratabc.simulators.ising import ising_exchange_sampler

        chain = ising_exchange_sampler(model, problem.x_star, stage.n_iter, float(init[0]), rng, **common)
        return _mcmc_result(stage, chain, None, None)

    if stage.sampler == "analytic":
        chain = run_analytic_mcmc(problem, model.summary_loglik(float(problem.s_star[0])), stage.n_iter, init, rng, **common)
        return _mcmc_result(stage, chain, None, None)

    sigma = _resolve_sigma(stage, model, prev, pilot)
    delta = _resolve_delta(stage, prev)
    if stage.sampler == "pm":
        chain = run_pm_abc_mcmc(problem, stage.M, delta, sigma, stage.n_iter, init, rng, kernel=stage.kernel, **common)
    elif stage.sampler == "r":
        chain = run_r_abc_mcmc(
            problem, stage.R, stage.n_iter, init, rng,
            delta=delta, sigma=sigma, self_tune=stage.self_tune, psi=stage.psi,
            K_burnin=stage.K_burnin, check_fraction=stage.check_fraction,
            kernel=stage.kernel, index_rng=index_rng, **common,
        )
    else:
        spec = StrataSpec.relative(stage.strata, delta)
        chain = run_rs_abc_mcmc(
            problem, stage.R1, stage.R2, spec, delta, sigma, stage.n_iter, init, rng,
            kernel=stage.kernel, averaged=stage.sampler == "xrs", index_rng=index_rng, **common,
        )
    handoff_sigma = chain.sigma if chain.sigma is not None else sigma
    return _mcmc_result(stage, chain, handoff_sigma, float(chain.delta[-1]))


def _mcmc_result(stage: StageConfig, chain: Chain, sigma: Optional[ScalingMatrix], delta: Optional[float]) -> StageResult:
    return StageResult(
        stage=stage, chain=chain, sigma=sigma, delta=delta, last_phi=chain.last_phi,
        proposal_cov=chain.proposal.covariance.copy() if chain.proposal is not None else None,
    )


def _run_smc_stage(
    stage: StageConfig,
    problem: ABCProblem,
    prev: Optional[StageResult],
    pilot: _PilotHolder,
    rng: RandomStream,
) -> StageResult:
    sigma = _resolve_sigma(stage, problem.model, prev, pilot)
    smc = stage.smc
    trace: list[SMCIterationRecord] = []
    snapshots: list[ParticlePopulation] = []
    on_iteration = (lambda record, pop: snapshots.append(pop.copy())) if smc.snapshots else None
    start = time.perf_counter()
    population = run_abc_smc(
        problem, smc.N, smc.gamma, smc.E if smc.E is not None else smc.N / 2.0, smc.stop_rate, rng,
        sigma=sigma, kind=stage.kernel, max_iterations=smc.max_iterations,
        jitter=get_settings().proposal_jitter, trace=trace, on_iteration=on_iteration,
    )
    W = population.weights
    return StageResult(
        stage=stage, population=population, smc_trace=trace, snapshots=snapshots, sigma=sigma,
        wall_time=time.perf_counter() - start,
        delta=population.delta if np.isfinite(population.delta) else None,
        last_phi=W @ population.phi,
        proposal_cov=population_proposal_covariance(population, get_settings().proposal_jitter),
    )


# ---------------------------------------------------------------------------
# Artifact writing
# ---------------------------------------------------------------------------


def write_json(path: Path, payload: BaseModel | dict) -> None:
    text = payload.model_dump_json(indent=2) if isinstance(payload, BaseModel) else json.dumps(payload, indent=2, sort_keys=True)
    path.write_text(text + "\n")


def write_chain(path: Path, chain: Chain) -> None:
    """One row per iteration: iter, θ..., loglik, accepted, delta."""
    n = len(chain)
    names = list(chain.parameter_names) or [f"theta{j}" for j in range(chain.theta.shape[1])]
    table = np.column_stack(
        [np.arange(1, n + 1), chain.theta, chain.log_likelihood, chain.accepted.astype(int), chain.delta]
    )
    fmt = ["%d"] + ["%.17g"] * len(names) + ["%.17g", "%d", "%.17g"]
    header = "\t".join(["iter", *names, "loglik", "accepted", "delta"])
    np.savetxt(path, table, fmt=fmt, delimiter="\t", header=header, comments="")


def read_chain(path: Path, burn_in: int = 0) -> Chain:
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"chain file not found: {path}"])
    lines = path.read_text().splitlines()
    header = lines[0].split("\t") if lines else []
    if header[:1] != ["iter"] or header[-3:] != ["loglik", "accepted", "delta"]:
        raise ConfigError([f"{path}: not a chain file"])
    if len(lines) < 2:
        raise ConfigError([f"{path}: chain file is empty"])
    table = np.atleast_2d(np.loadtxt(path, delimiter="\t", skiprows=1))
    if table.size == 0:
        raise ConfigError([f"{path}: chain file is empty"])
    p = len(header) - 4
    theta = table[:, 1 : 1 + p]
    return Chain(
        phi=theta, theta=theta, log_likelihood=table[:, 1 + p], accepted=table[:, 2 + p].astype(bool),
        delta=table[:, 3 + p], parameter_names=tuple(header[1 : 1 + p]), burn_in=burn_in,
        sampler=path.stem.removeprefix("chain_"),
    )


def _write_table(path: Path, header: list[str], rows: np.ndarray, fmt: str | list[str] = "%.17g") -> None:
    np.savetxt(path, np.atleast_2d(rows), fmt=fmt, delimiter="\t", header="\t".join(header), comments="")


def _write_population(path: Path, model: Simulator, pop: ParticlePopulation) -> None:
    header = [*model.parameter_names, "weight", "distance"]
    _write_table(path, header, np.column_stack([pop.theta, pop.weights, pop.distances]))


def write_stage(out: Path, result: StageResult, model: Simulator) -> StageManifest:
    stage = result.stage
    files: list[str] = []
    manifest = StageManifest(name=stage.name, sampler=stage.sampler, n_iter=stage.n_iter)

    if result.chain is not None:
        chain = result.chain
        name = f"chain_{stage.name}.tsv"
        write_chain(out / name, chain)
        files.append(name)
        diag = diagnose_chain(chain)
        write_json(out / f"diagnostics_{stage.name}.json", diag)
        files.append(f"diagnostics_{stage.name}.json")
        manifest.diagnostics = diag
        if chain.schedule is not None:
            name = f"threshold_{stage.name}.tsv"
            _write_table(out / name, ["iter", "delta"], np.array(chain.schedule.history, dtype=float), ["%d", "%.17g"])
            files.append(name)
        if chain.strata_counts is not None:
            name = f"strata_{stage.name}.tsv"
            J = chain.strata_counts.shape[1]
            _write_table(out / name, [f"n{j + 1}" for j in range(J)], chain.strata_counts, "%d")
            files.append(name)

    if result.population is not None:
        pop = result.population
        trace_rows = np.array(
            [[r.iteration, r.delta, r.ess, r.acceptance_rate, int(r.resampled), int(r.fallback)] for r in result.smc_trace]
        ).reshape(-1, 6)
        name = f"smc_trace_{stage.name}.tsv"
        _write_table(out / name, ["iteration", "delta", "ess", "acceptance_rate", "resampled", "fallback"], trace_rows,
                     ["%d", "%.17g", "%.17g", "%.17g", "%d", "%d"])
        files.append(name)
        name = f"population_{stage.name}.tsv"
        _write_population(out / name, model, pop)
        files.append(name)
        for snap in result.snapshots:
            snap_dir = out / f"snapshots_{stage.name}"
            snap_dir.mkdir(exist_ok=True)
            _write_population(snap_dir / f"population_{snap.iteration:04d}.tsv", model, snap)
        W = pop.weights
        posterior = []
        for j, pname in enumerate(model.parameter_names):
            mean, lo, hi = weighted_posterior_summary(pop.theta[:, j], W)
            posterior.append(PosteriorSummary(name=pname, mean=mean, lower=lo, upper=hi))
        smc_diag = SMCDiagnostics(
            iterations=pop.iteration, final_delta=pop.delta, ess=ess_from_log(pop.log_weights),
            last_acceptance_rate=result.smc_trace[-1].acceptance_rate if result.smc_trace else None,
            wall_time=result.wall_time, posterior=posterior,
        )
        write_json(out / f"diagnostics_{stage.name}.json", smc_diag)
        files.append(f"diagnostics_{stage.name}.json")
        manifest.smc = smc_diag

    manifest.files = files
    manifest.handoff_delta = result.delta
    manifest.handoff_sigma = result.sigma.to_list() if result.sigma is not None else None
    return manifest


def code_version() -> str:
    try:
        return metadata.version("stratabc")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def run_experiment(
    config: ExperimentConfig,
    replicate: Optional[int] = None,
    progress: Optional[StageProgress] = None,
) -> RunArtifacts:
    """Run every stage in order and write the artifacts of the run."""
    out = resolve_output_dir(config, replicate)
    out.mkdir(parents=True, exist_ok=True)
    model = get_model(config.model.id, **config.model.options)
    problem = build_problem(config, model)
    pilot = _PilotHolder(config, model)
    keys: tuple[int, ...] = (Purpose.REPLICATE, replicate) if replicate is not None else ()

    write_json(out / "config.json", config.model_dump(mode="json"))
    results: list[StageResult] = []
    stages: list[StageManifest] = []
    prev: Optional[StageResult] = None
    for i, stage in enumerate(config.stages):
        try:
            result = run_stage(config, i, problem, prev, pilot, keys, progress)
        except ConfigError:
            raise
        except StratABCError as e:
            logger.error(f"[STAGE] {stage.name} ({stage.sampler}) failed: {e}")
            raise type(e)(f"stage {stage.name!r} ({stage.sampler}): {e}") from e
        results.append(result)
        stages.append(write_stage(out, result, model))
        prev = result

    manifest = RunManifest(
        experiment=config.name, model=config.model.id, seed=config.seed, code_version=code_version(),
        created_at=datetime.now(timezone.utc), output_dir=str(out), stages=stages,
    )
    write_json(out / "manifest.json", manifest)
    logger.info(f"[RUN] {config.name}: artifacts written to {out}")
    return RunArtifacts(output_dir=out, manifest=manifest, results=results)


def load_diagnostics(path: Path) -> ChainDiagnostics:
    return ChainDiagnostics.model_validate_json(Path(path).read_text())


# ---------------------------------------------------------------------------
# Replicated runs
# ---------------------------------------------------------------------------


def _run_replicate(config: ExperimentConfig, replicate: int) -> Path:
    return run_experiment(config, replicate=replicate).output_dir


def summarize_batch(config: ExperimentConfig, run_dirs: list[Path]) -> dict[str, Any]:
    """Mean worst IAT per MCMC stage and, against ``batch.reference_stage``,
    the median per-coordinate Wasserstein distance of every other stage."""
    summary: dict[str, Any] = {"experiment": config.name, "replicates": len(run_dirs), "stages": {}}
    reference = config.batch.reference_stage
    for stage in config.stages:
        if stage.sampler == "smc":
            continue
        worst = []
        distances: list[list[float]] = []
        for run_dir in run_dirs:
            worst.append(load_diagnostics(run_dir / f"diagnostics_{stage.name}.json").worst_iat)
            if reference is not None and reference != stage.name and config.stage(reference).sampler != "smc":
                draws = read_chain(run_dir / f"chain_{stage.name}.tsv", stage.burn_in).retained()
                ref = read_chain(run_dir / f"chain_{reference}.tsv", config.stage(reference).burn_in).retained()
                distances.append([wasserstein_1d(draws[:, j], ref[:, j]) for j in range(draws.shape[1])])
        entry: dict[str, Any] = {"mean_worst_iat": float(np.mean(worst))}
        if distances:
            entry["median_wasserstein"] = [float(v) for v in np.median(np.asarray(distances), axis=0)]
        summary["stages"][stage.name] = entry
    return summary


def run_batch(config: ExperimentConfig, replicates: Optional[int] = None, workers: Optional[int] = None) -> Path:
    """Independent replicates on disjoint streams, one process per replicate."""
    n = replicates if replicates is not None else config.batch.replicates
    workers = workers if workers is not None else get_settings().batch_workers
    logger.info(f"[BATCH] {config.name}: {n} replicates")
    if workers == 1 or n == 1:
        run_dirs = [_run_replicate(config, r) for r in range(n)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            run_dirs = list(pool.map(_run_replicate, [config] * n, range(n)))
    summary = summarize_batch(config, run_dirs)
    out = resolve_output_dir(config)
    write_json(out / "batch_summary.json", summary)
    logger.info(f"[BATCH] summary written to {out / 'batch_summary.json'}")
    return out
