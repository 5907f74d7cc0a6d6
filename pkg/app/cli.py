#!/usr/bin/env python3
"""
Interface de linha de comando do NLS Harmônico.

Códigos de saída:
    0: sucesso
    1: suíte de verificação com falhas
    2: configuração inválida ou entrada fora do domínio
    3: falha numérica (failure.json no diretório de saída)
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pydantic
import uvicorn

from app.core.config import settings
from app.core.errors import DomainRejection, FieldFormatError, NumericalFailure
from app.core.field_io import read_field, write_field
from app.core.log_setup import configure_logging
from app.models.grid import Field, Grid
from app.models.run import RunConfig
from app.services import (
    diagnostics,
    field_ops,
    nls_solver,
    profiles,
    propagators,
    run_manager,
    variational,
    verification,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SUITE_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_NUMERICAL = 3
FAILED_STATUSES = ("resolution_lost", "step_underflow")

Outcome = Tuple[str, dict, int]


def load_config(path: str) -> RunConfig:
    """
    Lê e valida um RunConfig em JSON.

    Raises:
        pydantic.ValidationError: Chave desconhecida ou valor inválido
        DomainRejection: Arquivo ausente ou JSON malformado
    """
    source = Path(path)
    if not source.exists():
        raise DomainRejection(f"Configuração não encontrada: {source}")
    try:
        payload = json.loads(source.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DomainRejection(f"JSON inválido em {source}: {e}")
    return RunConfig.model_validate(payload)


def format_validation_error(error: pydantic.ValidationError) -> List[str]:
    """Uma linha 'caminho.do.campo: mensagem' por erro."""
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<raiz>"
        lines.append(f"{location}: {item['msg']}")
    return lines


def _output_dir(requested: Optional[str], config: Optional[RunConfig], run_id: str) -> Path:
    if requested:
        return Path(requested)
    if config is not None and config.output_dir:
        return Path(config.output_dir)
    return Path(settings.RUNS_DIR) / run_id


def execute(
    command: str,
    out_dir: Optional[str],
    config: Optional[RunConfig],
    work: Callable[[str, Path], Outcome],
) -> int:
    """
    Executa um subcomando registrado: diretório de saída, registro e tradução de erros.

    Args:
        command: Nome do subcomando
        out_dir: Diretório pedido (padrão: output_dir do config ou RUNS_DIR/run_id)
        config: Configuração validada, se houver
        work: Função (run_id, out) -> (status, resumo, código de saída)

    Returns:
        Código de saída
    """
    run_id = run_manager.new_run_id(command)
    out = _output_dir(out_dir, config, run_id)
    out.mkdir(parents=True, exist_ok=True)
    digest = run_manager.config_hash(config.canonical()) if config is not None else ""
    run_manager.register_run(run_id, command, out, digest)

    try:
        status, summary, exit_code = work(run_id, out)
    except (DomainRejection, FieldFormatError) as e:
        logger.error(f"Entrada rejeitada em {command}: {e}")
        run_manager.write_failure(out, e, EXIT_BAD_INPUT)
        run_manager.finish_run(run_id, "rejected", EXIT_BAD_INPUT, e.to_dict())
        print(f"erro: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except NumericalFailure as e:
        logger.error(f"Falha numérica em {command}: {e}", exc_info=True)
        run_manager.write_failure(out, e, EXIT_NUMERICAL)
        run_manager.finish_run(run_id, "failed", EXIT_NUMERICAL, e.to_dict())
        failure_file = out / run_manager.FAILURE_FILE
        print(f"falha numérica: {e} (detalhes em {failure_file})", file=sys.stderr)
        return EXIT_NUMERICAL

    run_manager.finish_run(run_id, status, exit_code, summary)
    payload = {"run_id": run_id, "status": status, "output_dir": str(out), **summary}
    print(json.dumps(payload, default=str))
    return exit_code


def _write_checkpoints(result, out: Path, every: int) -> int:
    if every <= 0 or result.trajectory is None:
        return 0
    written = 0
    for index, f in enumerate(result.trajectory.fields):
        if index % every == 0:
            write_field(f, out / "checkpoints" / f"state_{index:05d}.nlsh")
            written += 1
    logger.info(f"{written} estados intermediários gravados em {out / 'checkpoints'}")
    return written


def _evolution_reports(config: RunConfig, result, out: Path) -> dict:
    """Série CSV, estado final e diagnósticos opcionais de uma evolução."""
    write_field(result.final, out / "final.nlsh")
    report = {"evolution": result.to_dict()}
    if config.diagnostics.series:
        diagnostics.write_series_csv(result.series, out / "series.csv")
    if config.diagnostics.strichartz:
        report["strichartz_cumulative"] = float(result.series.column("strichartz_cum")[-1])
    report["checkpoints"] = _write_checkpoints(result, out, config.diagnostics.checkpoint_every)

    trajectory = result.trajectory
    if config.diagnostics.local_smoothing and trajectory is not None and len(trajectory) > 1:
        smoothing = diagnostics.local_smoothing_functional(
            trajectory, config.diagnostics.smoothing_center, config.diagnostics.smoothing_radius
        )
        report["local_smoothing"] = smoothing.to_dict()
    return report


def _virial_report(config: RunConfig, result) -> Tuple[Optional[dict], Optional[dict]]:
    trajectory = result.trajectory
    kind = config.potential.kind
    if trajectory is None or kind not in ("harmonic", "free"):
        return None, None
    if len(trajectory) < variational.VIRIAL_MIN_SAMPLES:
        logger.warning(f"Apenas {len(trajectory)} instantâneos; virial omitido")
        return None, None
    cfg = config.solver_config()
    series, certificate = variational.virial_diagnostics(trajectory, cfg.mu, cfg.p, kind)
    return series.to_dict(), certificate.to_dict() if certificate else None


def cmd_evolve(args) -> int:
    config = load_config(args.config)

    def work(run_id: str, out: Path) -> Outcome:
        grid = config.grid.build()
        u0 = config.initial.build(grid)
        cfg = config.solver_config()
        run_manager.write_manifest(out, run_id, "evolve", config.canonical(), {"u0": u0})

        result = nls_solver.evolve(u0, cfg)
        report = _evolution_reports(config, result, out)
        if config.diagnostics.virial:
            report["virial"], report["certificate"] = _virial_report(config, result)
        if config.diagnostics.trapping and grid.d == 3:
            report["trapping"] = variational.energy_trapping_classify(u0).to_dict()
        run_manager.write_json(out / "report.json", report)

        summary = {"t_final": result.t_final, "steps": result.steps, "reason": result.reason}
        if result.status in FAILED_STATUSES:
            failure = NumericalFailure(
                f"Evolução encerrada com status {result.status} em t={result.t_final:.6f}",
                result.to_dict(),
            )
            run_manager.write_failure(out, failure, EXIT_NUMERICAL)
            return result.status, summary, EXIT_NUMERICAL
        return result.status, summary, EXIT_OK

    return execute("evolve", args.out, config, work)


def _periodicity_deviation(f: Field, evolved: Field, t: float) -> Optional[float]:
    """Desvio de e^{-itH} f contra e^{-itd/2} f(±x) quando t é múltiplo de pi."""
    turns = t / np.pi
    m = int(round(turns))
    if abs(turns - m) > 1e-12:
        return None
    expected = propagators.parity(f) if m % 2 else f
    expected = expected * np.exp(-0.5j * t * f.grid.d)
    return float(np.max(np.abs(evolved.values - expected.values)))


def cmd_propagate(args) -> int:
    out_file = Path(args.out)

    def work(run_id: str, out: Path) -> Outcome:
        f = read_field(args.input)
        config = {"input": str(args.input), "t": args.t, "method": args.method, "K": args.K}
        run_manager.write_manifest(out, run_id, "propagate", config, {"input": f})

        start = time.perf_counter()
        evolved = propagators.propagate(f, args.t, method=args.method, K=args.K)
        seconds = time.perf_counter() - start
        write_field(evolved, out_file)

        mass_in = field_ops.l2_norm(f)
        summary = {
            "output": str(out_file),
            "seconds": seconds,
            "l2_drift": abs(field_ops.l2_norm(evolved) - mass_in) / max(mass_in, 1e-300),
            "max_deviation": _periodicity_deviation(f, evolved, args.t),
        }
        run_manager.write_json(out / "propagate.json", summary)
        return "completed", summary, EXIT_OK

    return execute("propagate", args.run_dir or str(out_file.parent), None, work)


def cmd_decompose(args) -> int:
    def work(run_id: str, out: Path) -> Outcome:
        f = read_field(args.input)
        window = (args.t_min, args.t_max)
        config = {"input": str(args.input), "levels": args.levels, "eps": args.eps}
        config["window"] = list(window)
        run_manager.write_manifest(out, run_id, "decompose", config, {"input": f})

        result = profiles.profile_decompose(f, args.levels, args.eps, window)
        write_field(result.remainder, out / "remainder.nlsh")
        for j, item in enumerate(result.items):
            write_field(item.profile, out / "profiles" / f"profile_{j:02d}.nlsh")
        report = result.to_dict()
        run_manager.write_json(out / "decomposition.json", report)

        summary = {
            "profiles": len(result.items),
            "sigma_defect": result.decoupling.sigma_defect,
            "remainder_fraction": result.remainder_fraction,
        }
        return "completed", summary, EXIT_OK

    return execute("decompose", args.out, None, work)


def cmd_blowup(args) -> int:
    config = load_config(args.config)
    if config.solver.mu != -1:
        config = config.model_copy(update={"solver": config.solver.model_copy(update={"mu": -1})})
        logger.warning("blowup força o caso focalizante (mu = -1)")
    if config.solver.snapshot_interval is None:
        interval = config.solver.t_end / 20.0
        solver = config.solver.model_copy(update={"snapshot_interval": interval})
        config = config.model_copy(update={"solver": solver})

    def work(run_id: str, out: Path) -> Outcome:
        grid = config.grid.build()
        u0 = config.initial.build(grid)
        cfg = config.solver_config()
        run_manager.write_manifest(out, run_id, "blowup", config.canonical(), {"u0": u0})

        trapping = variational.energy_trapping_classify(u0) if grid.d == 3 else None
        result = nls_solver.evolve(u0, cfg)
        report = _evolution_reports(config, result, out)
        report["trapping"] = trapping.to_dict() if trapping else None
        report["virial"], report["certificate"] = _virial_report(config, result)
        report["blowup"] = result.blowup_report()
        run_manager.write_json(out / "blowup.json", report)

        summary = {
            "classification": trapping.classification if trapping else None,
            "t_final": result.t_final,
            "reason": result.reason,
            "certificate_root": report["certificate"]["root"] if report["certificate"] else None,
        }
        exit_code = EXIT_NUMERICAL if result.status in FAILED_STATUSES else EXIT_OK
        if exit_code == EXIT_NUMERICAL:
            failure = NumericalFailure(f"Evolução encerrada com status {result.status}")
            run_manager.write_failure(out, failure, exit_code)
        return result.status, summary, exit_code

    return execute("blowup", args.out, config, work)


def cmd_verify(args) -> int:
    def work(run_id: str, out: Path) -> Outcome:
        run_manager.write_manifest(out, run_id, "verify", {"suite": args.suite})
        report = verification.run_suite(args.suite)
        run_manager.write_json(out / "verify.json", report.to_dict())
        for check in report.checks:
            mark = "ok" if check.passed else "FALHOU"
            print(f"[{mark:>6}] {check.name:<28} {check.value:.3e} <= {check.tolerance:.1e}")
        summary = {"checks": len(report.checks), "failures": report.failures}
        if report.passed:
            return "completed", summary, EXIT_OK
        return "failed", summary, EXIT_SUITE_FAILED

    return execute("verify", args.out, None, work)


def bench_propagators(
    sizes: Sequence[int], d: int, L: float, t: float, repeats: int
) -> List[dict]:
    """Tempo mínimo (s) de cada propagador por tamanho de grade."""
    rows = []
    for n in sizes:
        grid = Grid(d=d, L=L, n=n)
        f = Field(grid, np.exp(-0.5 * grid.r2))
        row = {"n": n, "d": d}
        for method in propagators.PROPAGATION_METHODS:
            if method == "mehler" and d > 1:
                row[method] = None
                continue
            timings = []
            for _ in range(repeats):
                start = time.perf_counter()
                propagators.propagate(f, t, method=method)
                timings.append(time.perf_counter() - start)
            row[method] = min(timings)
        rows.append(row)
        logger.info(f"Bench n={n}: {row}")
    return rows


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]

    def work(run_id: str, out: Path) -> Outcome:
        config = {"sizes": sizes, "d": args.dim, "L": args.L, "t": args.t, "repeats": args.repeats}
        run_manager.write_manifest(out, run_id, "bench", config)
        rows = bench_propagators(sizes, args.dim, args.L, args.t, args.repeats)
        run_manager.write_json(out / "bench.json", {"config": config, "rows": rows})

        print(f"{'n':>8} " + " ".join(f"{m:>12}" for m in propagators.PROPAGATION_METHODS))
        for row in rows:
            cells = []
            for method in propagators.PROPAGATION_METHODS:
                value = row[method]
                cells.append(f"{'-':>12}" if value is None else f"{value:>12.4e}")
            print(f"{row['n']:>8} " + " ".join(cells))
        return "completed", {"sizes": sizes}, EXIT_OK

    return execute("bench", args.out, None, work)


def cmd_fixture(args) -> int:
    out_file = Path(args.out)

    def work(run_id: str, out: Path) -> Outcome:
        config = {"d": args.dim, "L": args.L, "n": args.n, "N": args.N}
        config["separation"] = args.separation
        run_manager.write_manifest(out, run_id, "fixture", config)
        grid = Grid(d=args.dim, L=args.L, n=args.n)
        total, items = profiles.plant_two_bubbles(grid, args.N, args.separation)
        write_field(total, out_file)
        frames = [item.to_dict() for item in items]
        run_manager.write_json(out_file.with_suffix(".json"), {"frames": frames})
        return "completed", {"output": str(out_file), "bubbles": len(items)}, EXIT_OK

    return execute("fixture", args.run_dir or str(out_file.parent), None, work)


def cmd_schema(args) -> int:
    print(json.dumps(RunConfig.model_json_schema(), indent=2))
    return EXIT_OK


def cmd_serve(args) -> int:
    uvicorn.run("app.main:app", host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nls-harmonic",
        description="Simulação e verificação espectral da NLS com potencial harmônico",
    )
    parser.add_argument("--log-level", default=None, help="Nível de log (padrão: LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="Evolução não linear a partir de um RunConfig")
    p.add_argument("--config", required=True, help="RunConfig em JSON")
    p.add_argument("--out", default=None, help="Diretório de saída")
    p.set_defaults(handler=cmd_evolve)

    p = sub.add_parser("propagate", help="Aplica e^{-itH} a um campo NLSH1")
    p.add_argument("--input", required=True, help="Campo NLSH1 de entrada")
    p.add_argument("--t", type=float, required=True, help="Tempo de propagação")
    p.add_argument("--method", choices=propagators.PROPAGATION_METHODS, default="lens")
    p.add_argument("--K", type=int, default=None, help="Truncamento de Hermite")
    p.add_argument("--out", required=True, help="Campo NLSH1 de saída")
    p.add_argument("--run-dir", default=None, help="Diretório do manifesto (padrão: o de --out)")
    p.set_defaults(handler=cmd_propagate)

    p = sub.add_parser("decompose", help="Decomposição em perfis de um campo NLSH1")
    p.add_argument("--input", required=True, help="Campo NLSH1 de entrada")
    p.add_argument("--levels", type=int, default=4, help="Número máximo de perfis")
    p.add_argument("--eps", type=float, default=0.1, help="Limiar do escore normalizado")
    p.add_argument("--t-min", type=float, default=profiles.DEFAULT_WINDOW[0])
    p.add_argument("--t-max", type=float, default=profiles.DEFAULT_WINDOW[1])
    p.add_argument("--out", default=None, help="Diretório de saída")
    p.set_defaults(handler=cmd_decompose)

    p = sub.add_parser("blowup", help="Evolução focalizante, aprisionamento e certificado virial")
    p.add_argument("--config", required=True, help="RunConfig em JSON")
    p.add_argument("--out", default=None, help="Diretório de saída")
    p.set_defaults(handler=cmd_blowup)

    p = sub.add_parser("verify", help="Executa as suítes de invariantes")
    p.add_argument("--suite", choices=verification.SUITE_NAMES, default="core")
    p.add_argument("--out", default=None, help="Diretório de saída")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("bench", help="Tabela de tempos dos propagadores")
    p.add_argument("--sizes", default="64,128,256", help="Lista de n separada por vírgulas")
    p.add_argument("--dim", type=int, default=1, choices=(1, 2, 3))
    p.add_argument("--L", type=float, default=16.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", default=None, help="Diretório de saída")
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("fixture", help="Gera o campo de duas bolhas em NLSH1")
    p.add_argument("--out", required=True, help="Campo NLSH1 de saída")
    p.add_argument("--dim", type=int, default=1, choices=(1, 2, 3))
    p.add_argument("--L", type=float, default=16.0)
    p.add_argument("--n", type=int, default=8192)
    p.add_argument("--N", type=int, default=64, help="Escala diádica das bolhas")
    p.add_argument("--separation", type=float, default=16.0)
    p.add_argument("--run-dir", default=None, help="Diretório do manifesto (padrão: o de --out)")
    p.set_defaults(handler=cmd_fixture)

    p = sub.add_parser("schema", help="Imprime o JSON Schema do RunConfig")
    p.set_defaults(handler=cmd_schema)

    p = sub.add_parser("serve", help="Inicia o painel HTTP somente-leitura")
    p.add_argument("--host", default=settings.API_HOST)
    p.add_argument("--port", type=int, default=settings.API_PORT)
    p.set_defaults(handler=cmd_serve)
    return parser


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Executa a CLI e devolve o código de saída."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except pydantic.ValidationError as e:
        for line in format_validation_error(e):
            print(f"config inválida: {line}", file=sys.stderr)
        logger.error(f"Configuração inválida: {e.error_count()} erro(s)")
        return EXIT_BAD_INPUT
    except (DomainRejection, FieldFormatError) as e:
        print(f"erro: {e}", file=sys.stderr)
        logger.error(f"Entrada rejeitada: {e}")
        return EXIT_BAD_INPUT


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
