"""``harness`` — the command-line surface of the evaluation toolkit.

Subcommands:

- ``harness ingest <file>``      — chunk a document into a vector-store
  snapshot (creates or extends it).
- ``harness ask "<query>"``      — route one query (store update, chess
  engine, retrieval QA, or direct QA) and print the answer.
- ``harness eval``               — run the evaluation over a dataset and
  write a run directory (records, summary, annotation tasks).
- ``harness annotate serve``     — serve the annotation API and UI for a run.
- ``harness report``             — emit report.json / report.md for runs.

Exit status is 0 on success and nonzero on any hard error. Model credentials
are only ever read from the environment variable named in the backend spec,
never from files or flags.
"""

from __future__ import annotations

import datetime as _dt
import json
import shlex
import sys
from importlib import resources
from pathlib import Path

import click

from ..engine import (
    EngineConfig,
    EngineError,
    load_puzzles,
    start_session,
    stop_session,
)
from ..fake_engine import fixture_for_puzzles, write_fixture
from ..llm import BackendSpec, LlmError, MockBackend, build_backend
from ..router import Router, RouterError
from ..store import (
    FixtureEmbedder,
    HashingEmbedder,
    SnapshotError,
    StoreError,
    VectorStore,
)
from .dataset import QUALITIES, DatasetError, load_dataset
from .results import (
    DEFAULT_QUORUM,
    MAX_QUORUM,
    RECORDS_FILE,
    RecordsLog,
    ResultsError,
    config_hash,
    emit_report,
    file_sha256,
    write_run,
)
from .runner import RunnerError, Services, run_quality


def _bundled(name: str) -> Path:
    return Path(str(resources.files("cogchess").joinpath(f"data/{name}")))


def _fail(message: str) -> "click.ClickException":
    return click.ClickException(message)


def _resolve_backend(name: str, backends_file, pattern_file):
    """Build (backend, summary-dict) from a backend name.

    ``mock`` is built in and uses the bundled pattern file (or
    ``--pattern-file``); any other name must appear in ``--backends-file``,
    a JSON object mapping names to backend specs."""
    if backends_file is not None:
        with open(backends_file, "r", encoding="utf-8") as fh:
            table = json.load(fh)
        if name not in table:
            raise _fail(f"backend {name!r} not in {backends_file} (has: {', '.join(sorted(table))})")
        spec = BackendSpec.from_dict(table[name])
        backend = build_backend(spec)
        return backend, {"kind": spec.kind, "model": spec.model, "endpoint": spec.endpoint}
    if name == "mock":
        path = Path(pattern_file) if pattern_file else _bundled("mock_llm.json")
        backend = MockBackend.from_file(path)
        return backend, {"kind": "mock", "model": backend.model, "endpoint": None, "patterns": str(path)}
    raise _fail(f"unknown backend {name!r}; pass --backends-file to define named backends")


def _engine_config_from_cmd(engine_cmd: str, *, depth, movetime, move_timeout) -> EngineConfig:
    parts = shlex.split(engine_cmd)
    if not parts:
        raise _fail("--engine-cmd is empty")
    return EngineConfig(
        executable_path=parts[0],
        args=tuple(parts[1:]),
        depth=depth,
        movetime=movetime,
        move_timeout=move_timeout,
    )


def _scripted_engine_config(puzzles, out_dir: Path, *, move_timeout: float) -> EngineConfig:
    """A scripted engine that plays every bundled puzzle's reference line."""
    fixture_path = out_dir / "engine_fixture.json"
    write_fixture(fixture_for_puzzles(puzzles), fixture_path)
    return EngineConfig(
        executable_path=sys.executable,
        args=("-m", "cogchess.fake_engine", str(fixture_path)),
        depth=1,
        move_timeout=move_timeout,
    )


def _load_snapshot(path: Path, embedder_spec_path):
    """Open a store snapshot, rebuilding the embedder it was saved with."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = json.loads(fh.readline())
    except (OSError, json.JSONDecodeError) as exc:
        raise _fail(f"{path}: cannot read snapshot header: {exc}")
    name = header.get("embedder")
    dim = header.get("dim")
    if embedder_spec_path is not None:
        embedder = _embedder_from_spec_file(embedder_spec_path)
    elif name == "hashing":
        embedder = HashingEmbedder(dim=dim)
    elif name == "fixture":
        raise _fail(f"{path}: snapshot uses the fixture embedder; pass --embedder-spec with its rules")
    else:
        raise _fail(f"{path}: snapshot embedder {name!r} cannot be rebuilt; pass --embedder-spec")
    return VectorStore.load(path, embedder)


def _embedder_from_spec_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    kind = raw.get("kind", "hashing")
    if kind == "hashing":
        return HashingEmbedder(dim=raw.get("dim", 256))
    if kind == "fixture":
        rules = [(r["keyword"], r["axis"]) for r in raw.get("rules", [])]
        return FixtureEmbedder(rules, dim=raw.get("dim", 64))
    raise _fail(f"{path}: unknown embedder kind {kind!r}")


@click.group()
def harness():
    """Evaluation toolkit: ingest documents, ask queries, run the evaluation,
    collect annotations, and emit reports."""


@harness.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--store", "store_path", type=click.Path(dir_okay=False, path_type=Path),
              default=Path("store.jsonl"), show_default=True, help="Snapshot to create or extend.")
@click.option("--source", default=None, help="Source label for the chunks (default: file stem).")
@click.option("--dim", default=256, show_default=True, help="Embedding width for a new store.")
@click.option("--embedder-spec", "embedder_spec_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON embedder spec for non-default stores.")
def ingest(file: Path, store_path: Path, source, dim, embedder_spec_path):
    """Chunk FILE into the vector store and save the snapshot."""
    text = file.read_text(encoding="utf-8")
    try:
        if store_path.exists():
            store = _load_snapshot(store_path, embedder_spec_path)
        elif embedder_spec_path is not None:
            store = VectorStore(_embedder_from_spec_file(embedder_spec_path))
        else:
            store = VectorStore(HashingEmbedder(dim=dim))
        chunks = store.ingest(text, source or file.stem)
        store.save(store_path)
    except (StoreError, SnapshotError) as exc:
        raise _fail(str(exc))
    click.echo(f"ingested {len(chunks)} chunk(s) from {file} into {store_path} ({len(store)} total)")


@harness.command()
@click.argument("query")
@click.option("--store", "store_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Vector-store snapshot to search.")
@click.option("--backend", default="mock", show_default=True, help="Backend name.")
@click.option("--backends-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file mapping backend names to specs.")
@click.option("--pattern-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Pattern file for the mock backend.")
@click.option("--embedder-spec", "embedder_spec_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Embedder spec for the snapshot, when not the default.")
@click.option("--engine-cmd", default=None, help="Engine command line for chess queries.")
@click.option("--depth", default=None, type=int, help="Engine search depth.")
@click.option("--move-timeout", default=120.0, show_default=True, help="Seconds to wait per move.")
def ask(query, store_path, backend, backends_file, pattern_file, embedder_spec_path,
        engine_cmd, depth, move_timeout):
    """Route QUERY and print the answer."""
    model, _ = _resolve_backend(backend, backends_file, pattern_file)
    store = _load_snapshot(store_path, embedder_spec_path) if store_path else None
    session = None
    try:
        if engine_cmd:
            config = _engine_config_from_cmd(engine_cmd, depth=depth, movetime=None,
                                             move_timeout=move_timeout)
            session = start_session(config)
        router = Router(model, store=store, engine=session)
        record = router.answer(query)
    except (RouterError, LlmError, EngineError, StoreError) as exc:
        raise _fail(str(exc))
    finally:
        if session is not None:
            stop_session(session)
    click.echo(f"route: {record.route.kind.value}")
    if record.flags:
        click.echo(f"flags: {', '.join(record.flags)}")
    if record.chunk_ids:
        click.echo(f"chunks: {', '.join(record.chunk_ids)}")
    click.echo(record.answer)
    if store is not None and store_path is not None and record.route.kind.value == "store-update":
        store.save(store_path)
        click.echo(f"(snapshot updated: {store_path})")


@harness.command(name="eval")
@click.option("--quality", default="all", show_default=True,
              type=click.Choice(("all",) + QUALITIES), help="Quality to run.")
@click.option("--backend", default="mock", show_default=True, help="Backend name.")
@click.option("--backends-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file mapping backend names to specs.")
@click.option("--pattern-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Pattern file for the mock backend.")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Dataset file (default: the bundled sample).")
@click.option("--puzzles", "puzzles_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Puzzle file (default: the bundled set).")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path),
              help="Run directory to create.")
@click.option("--engine-cmd", default=None,
              help="Engine command line (default: a scripted engine that plays the reference lines).")
@click.option("--depth", default=None, type=int, help="Engine search depth (real engines).")
@click.option("--movetime", default=None, type=int, help="Engine movetime ms (real engines).")
@click.option("--move-timeout", default=120.0, show_default=True, help="Seconds to wait per move.")
@click.option("--quorum", default=DEFAULT_QUORUM, show_default=True,
              type=click.IntRange(1, MAX_QUORUM), help="Annotators required per reasoning task.")
def eval_command(quality, backend, backends_file, pattern_file, dataset_path, puzzles_path,
                 out_dir, engine_cmd, depth, movetime, move_timeout, quorum):
    """Run the evaluation and write a run directory."""
    dataset_file = dataset_path or _bundled("dataset.json")
    puzzle_file = puzzles_path or _bundled("puzzles.json")
    try:
        puzzles = load_puzzles(puzzle_file)
        dataset = load_dataset(dataset_file, puzzles=puzzles)
    except (DatasetError, ValueError, OSError) as exc:
        raise _fail(f"dataset: {exc}")

    qualities = list(QUALITIES) if quality == "all" else [quality]
    selected = {q: dataset.by_quality(q) for q in qualities}
    empty = [q for q, rows in selected.items() if not rows]
    if empty:
        raise _fail(f"dataset has no questions for: {', '.join(empty)}")

    model, backend_summary = _resolve_backend(backend, backends_file, pattern_file)

    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / RECORDS_FILE
    if records_path.exists():
        raise _fail(f"{records_path} already exists; choose a fresh --out directory")

    needs_engine = any(q in ("reasoning", "anticipation") for q in qualities)
    needs_store = any(q in ("memory", "attention") for q in qualities)

    engine_desc = "none"
    session = None
    if needs_engine:
        if engine_cmd:
            config = _engine_config_from_cmd(engine_cmd, depth=depth, movetime=movetime,
                                             move_timeout=move_timeout)
            engine_desc = engine_cmd
        else:
            config = _scripted_engine_config(puzzles, out_dir, move_timeout=move_timeout)
            engine_desc = "scripted-reference"
        try:
            session = start_session(config)
        except EngineError as exc:
            raise _fail(f"engine: {exc}")

    store = dataset.build_store() if needs_store else None
    services = Services(store=store, engine=session, puzzles={p.id: p for p in puzzles})

    cfg_hash = config_hash(
        {
            "dataset_sha256": file_sha256(dataset_file),
            "backend": backend_summary,
            "engine": engine_desc,
            "qualities": qualities,
            "quorum": quorum,
            "embedder": {
                "kind": dataset.embedder_spec.kind,
                "dim": dataset.embedder_spec.dim,
                "rules": list(map(list, dataset.embedder_spec.rules)),
            },
        }
    )
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    run_id = f"run-{started[:19].replace(':', '').replace('-', '')}-{cfg_hash[:8]}"

    log = RecordsLog(records_path)
    quality_runs = []
    try:
        for q in qualities:
            qrun = run_quality(q, selected[q], model, services, on_record=log.append)
            quality_runs.append(qrun)
            shown = "pending" if qrun.aggregate is None else f"{qrun.aggregate:.4f}"
            click.echo(f"{q}: {shown} ({len(qrun.records)} questions)")
    except RunnerError as exc:
        raise _fail(str(exc))
    finally:
        log.close()
        if session is not None:
            stop_session(session)

    finished = _dt.datetime.now(_dt.timezone.utc).isoformat()
    write_run(
        out_dir,
        run_id=run_id,
        backend_summary=backend_summary,
        quality_runs=quality_runs,
        dataset_info={"path": str(dataset_file), "sha256": file_sha256(dataset_file)},
        engine_info=engine_desc,
        quorum=quorum,
        started=started,
        finished=finished,
        cfg_hash=cfg_hash,
    )
    n_tasks = sum(len(qr.tasks) for qr in quality_runs)
    click.echo(f"run {run_id} written to {out_dir}")
    if n_tasks:
        click.echo(f"{n_tasks} annotation task(s) pending: harness annotate serve --run {out_dir}")


@harness.group()
def annotate():
    """Annotation service commands."""


@annotate.command()
@click.option("--bind", default="127.0.0.1:8765", show_default=True, help="host:port to listen on.")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path),
              help="Run directory with annotation tasks.")
@click.option("--quorum", default=None, type=click.IntRange(1, MAX_QUORUM),
              help="Override the run's annotator quorum.")
@click.option("--ui", "ui_dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Directory of UI static files (default: the packaged build).")
def serve(bind, run_dir, quorum, ui_dir):
    """Serve the annotation API and UI."""
    from .annotations import serve_annotations

    try:
        serve_annotations(bind, run_dir, quorum=quorum, ui_dir=ui_dir)
    except (ResultsError, ValueError, OSError) as exc:
        raise _fail(str(exc))


@harness.command()
@click.option("--run", "run_dirs", required=True, multiple=True,
              type=click.Path(exists=True, file_okay=False, path_type=Path),
              help="Run directory (repeat to compare backends).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Where to write the report (default: the first run directory).")
def report(run_dirs, out_dir):
    """Emit report.json and report.md for one or more runs."""
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    try:
        json_path, md_path = emit_report(list(run_dirs), out_dir)
    except ResultsError as exc:
        raise _fail(str(exc))
    click.echo(md_path.read_text(encoding="utf-8"))
    click.echo(f"report: {json_path} {md_path}")


def main():
    harness(prog_name="harness")


if __name__ == "__main__":
    main()
