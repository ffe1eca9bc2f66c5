"""Command line entry point.

Subcommands::

    generate      run the agent conversation for each transcript
    characterize  style metrics and aspect occurrence per labelled report set
    evaluate      LLM judging by characteristic, or pairwise preference
    correlate     LLM vs human judgment correlations
    bias          positional-bias table from preference outcomes
    replay        render a saved trace as markdown

Exit codes: 0 success, 1 some runs or judgments failed, 2 usage or config error.

Providers are ``openai``, ``mistral``, ``gemini`` or ``scripted:PATH``. A
scripted PATH is a recorded session (``.jsonl``, replayed strictly), a reply
script (``.json``), or a directory holding one of those per run key. Run keys
are the transcript file stem for ``generate``, ``<report>/<characteristic>``
for characteristic judging and ``<pair>#<ordering>`` for preference judging
(``/`` becomes ``__`` in file names). A reply script is either a JSON list of
replies or an object ``{"replies": {key: reply | [replies]}, "default": reply}``.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import json
import logging
import math
import os
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Sequence

from ecreport.agents import make_task_brief
from ecreport.characterization import (
    aspect_profile,
    build_aspect_lexicon,
    get_tagger,
    mean_style_stats,
    style_stats,
)
from ecreport.characterization.aspects import TaggerUnavailable
from ecreport.evaluation import (
    Characteristic,
    CharacteristicJudgment,
    MisalignedReports,
    NotDefined,
    PreferenceOutcome,
    Source,
    correlate_judges,
    correlate_per_evaluator,
    judge_characteristic,
    judge_preference,
    mean_coefficient,
    summarize_preferences,
)
from ecreport.evaluation.judging import CorrelationStats
from ecreport.external import REMOTE, Fixture, fetch_quarterly_earnings, load_acoustic_features, previous_quarter_record
from ecreport.gateway import (
    AuthError,
    Backend,
    ConstantBackend,
    RecordingBackend,
    RetryPolicy,
    ScriptedBackend,
    load_session,
    record_replay,
    remote_backend,
    save_session,
)
from ecreport.model import AgentRole, EcReportError
from ecreport.orchestrator import RevisionMode, RunConfig, RunError, run_generation
from ecreport.storage import atomic_write_text, load_trace, load_transcript, read_jsonl, save_trace, write_jsonl

logger = logging.getLogger("ecreport")

EXIT_OK, EXIT_FAILURES, EXIT_CONFIG = 0, 1, 2


class ConfigError(EcReportError):
    pass


@dataclass
class CliConfig:
    """Settings from ``--config`` JSON, overridden by command line flags."""

    provider: str = "openai"
    model: str = "gpt-4-1106-preview"
    temperature: float = 0.0
    agents: list[str] = field(default_factory=lambda: ["writer", "analyst", "psychologist", "editor"])
    rounds: int = 10
    revision_mode: str = RevisionMode.PER_ROUND.value
    audience: str = "Investor"
    transcripts_dir: str | None = None
    earnings: str | None = None
    cache_dir: str | None = None
    features_dir: str | None = None
    out_dir: str = "out"
    record_dir: str | None = None
    judges: list[str] = field(default_factory=list)
    jobs: int = 1

    def validate(self) -> None:
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        try:
            RevisionMode(self.revision_mode)
        except ValueError:
            raise ConfigError(
                f"revision_mode must be one of {[m.value for m in RevisionMode]}, got {self.revision_mode!r}"
            ) from None


def load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc.msg})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: expected a JSON object")
    known = {f.name for f in fields(CliConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{p}: unknown config keys {unknown}")
    return data


def resolve_config(args: argparse.Namespace) -> CliConfig:
    merged = load_config(getattr(args, "config", None))
    for f in fields(CliConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            merged[f.name] = value
    if isinstance(merged.get("agents"), str):
        merged["agents"] = [a for a in merged["agents"].split(",") if a.strip()]
    try:
        cfg = CliConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


def parse_agents(names: Sequence[str]) -> tuple[AgentRole, ...]:
    """Feedback roles in the given order; writer and client are always present."""
    roles: list[AgentRole] = []
    by_name = {r.value.lower(): r for r in AgentRole}
    for raw in names:
        name = raw.strip().lower()
        if name not in by_name:
            raise ConfigError(f"unknown agent {raw!r}; expected some of {sorted(by_name)}")
        role = by_name[name]
        if role.is_feedback and role not in roles:
            roles.append(role)
    return tuple(roles)


# --------------------------------------------------------------------------
# Providers
# --------------------------------------------------------------------------

BackendFactory = Callable[[str], Backend]


def _key_filename(key: str) -> str:
    return key.replace("/", "__")


def _read_script(path: Path) -> Any:
    try:
        if path.suffix == ".jsonl":
            return load_session(path)
        return json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, KeyError, OSError) as exc:
        raise ConfigError(f"unreadable script {path}: {exc}") from exc


def _script_backend(path: Path, script: Any, key: str) -> Backend:
    if path.suffix == ".jsonl":
        return record_replay(script, strict=True)
    if isinstance(script, list):
        return ScriptedBackend(script)
    if not isinstance(script, dict):
        raise ConfigError(f"{path}: reply script must be a list or an object")
    replies = script.get("replies", {})
    if key in replies:
        reply = replies[key]
        return ScriptedBackend(reply if isinstance(reply, list) else [reply])
    if "default" in script:
        return ConstantBackend(script["default"])
    return ScriptedBackend([])


def scripted_factory(path: Path) -> BackendFactory:
    if not path.exists():
        raise ConfigError(f"scripted provider path does not exist: {path}")
    cache: dict[Path, Any] = {}
    lock = threading.Lock()

    def make(key: str) -> Backend:
        if path.is_dir():
            names = (_key_filename(key) + ".jsonl", _key_filename(key) + ".json", "default.json")
            found = [path / n for n in names if (path / n).is_file()]
            if not found:
                # Nothing recorded for this key: the first call fails and is reported per run.
                return ScriptedBackend([])
            target = found[0]
        else:
            target = path
        with lock:
            if target not in cache:
                cache[target] = _read_script(target)
        return _script_backend(target, cache[target], key)

    return make


def backend_factory(provider: str) -> BackendFactory:
    if provider.startswith("scripted:"):
        return scripted_factory(Path(provider[len("scripted:"):]))
    try:
        backend = remote_backend(provider)
    except (ValueError, AuthError) as exc:
        raise ConfigError(str(exc)) from exc
    return lambda key: backend


def parse_judge(spec: str) -> tuple[str, BackendFactory]:
    model, sep, provider = spec.partition("@")
    if not sep or not model or not provider:
        raise ConfigError(f"judge must look like MODEL@PROVIDER, got {spec!r}")
    return model, backend_factory(provider)


def _timestamp() -> dt.datetime:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return dt.datetime.fromtimestamp(int(epoch), tz=dt.timezone.utc)
    return dt.datetime.now(dt.timezone.utc)


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _csv_text(rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _require_dir(path: str | None, what: str) -> Path:
    if not path:
        raise ConfigError(f"{what} is required")
    p = Path(path)
    if not p.is_dir():
        raise ConfigError(f"{what} not found: {p}")
    return p


# --------------------------------------------------------------------------
# generate
# --------------------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    if args.transcripts:
        paths = [Path(p) for p in args.transcripts]
        missing = [str(p) for p in paths if not p.is_file()]
        if missing:
            raise ConfigError(f"transcript file not found: {', '.join(missing)}")
    else:
        tdir = _require_dir(cfg.transcripts_dir, "transcripts dir")
        paths = sorted(tdir.glob("*.json"))
        if not paths:
            raise ConfigError(f"no *.json transcripts in {tdir}")

    roles = parse_agents(cfg.agents)
    try:
        run_config = RunConfig(
            feedback_roles=roles,
            round_cap=cfg.rounds,
            revision_mode=RevisionMode(cfg.revision_mode),
            model_id=cfg.model,
            temperature=cfg.temperature,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    earnings_source: Fixture | str | None = None
    if AgentRole.ANALYST in roles:
        if not cfg.earnings:
            raise ConfigError("the analyst agent needs --earnings (a fixture path or 'remote')")
        if cfg.earnings == REMOTE:
            earnings_source = REMOTE
        else:
            if not Path(cfg.earnings).exists():
                raise ConfigError(f"earnings fixtures not found: {cfg.earnings}")
            earnings_source = Fixture(Path(cfg.earnings))
    features_dir = _require_dir(cfg.features_dir, "features dir") if AgentRole.PSYCHOLOGIST in roles else None

    factory = backend_factory(cfg.provider)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = _timestamp()
    retry = RetryPolicy(retries=0) if cfg.provider.startswith("scripted:") else RetryPolicy()

    def run_one(path: Path) -> str | None:
        stem = path.stem
        backend = factory(stem)
        recorder = RecordingBackend(backend) if cfg.record_dir else None
        try:
            transcript = load_transcript(path)
            earnings = None
            if earnings_source is not None:
                records = fetch_quarterly_earnings(transcript.company_symbol, earnings_source, cfg.cache_dir)
                earnings = previous_quarter_record(records, transcript.fiscal_quarter)
            features = load_acoustic_features(features_dir / f"{stem}.json") if features_dir else ()
            brief = make_task_brief(transcript, cfg.audience, earnings, features)
            report, trace = run_generation(
                brief, run_config, recorder or backend, retry=retry, generated_at=stamp
            )
        except RunError as exc:
            save_trace(out_dir / f"{stem}.partial.trace.jsonl", exc.trace._replace(generated_at=stamp))
            return f"{path}: {exc}"
        except Exception as exc:  # one bad transcript must not stop the batch
            return f"{path}: {exc}"
        finally:
            if recorder is not None and recorder.session:
                save_session(Path(cfg.record_dir) / f"{stem}.jsonl", recorder.session)
        atomic_write_text(out_dir / f"{stem}.md", report.text.rstrip("\n") + "\n")
        save_trace(out_dir / f"{stem}.trace.jsonl", trace)
        logger.info("%s: %d rounds, %s", stem, trace.rounds_used, trace.terminated_by.value)
        return None

    errors = [e for e in _map(run_one, paths, cfg.jobs) if e]
    for e in errors:
        logger.error("generation failed: %s", e)
    logger.info("generated %d of %d reports into %s", len(paths) - len(errors), len(paths), out_dir)
    return EXIT_FAILURES if errors else EXIT_OK


# --------------------------------------------------------------------------
# characterize
# --------------------------------------------------------------------------


def _labelled_dir(spec: str) -> tuple[str, Path]:
    label, sep, path = spec.partition("=")
    if not sep:
        path, label = spec, Path(spec).name
    return label, Path(path)


def _load_transcripts(tdir: Path) -> dict:
    out = {}
    for p in sorted(tdir.glob("*.json")):
        try:
            out[p.stem] = load_transcript(p)
        except (EcReportError, OSError) as exc:
            raise ConfigError(f"unreadable transcript {p}: {exc}") from exc
    if not out:
        raise ConfigError(f"no *.json transcripts in {tdir}")
    return out


def cmd_characterize(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    transcripts = _load_transcripts(_require_dir(cfg.transcripts_dir, "transcripts dir"))
    report_sets: list[tuple[str, dict[str, str]]] = []
    for spec in args.reports:
        label, rdir = _labelled_dir(spec)
        if not rdir.is_dir():
            raise ConfigError(f"report dir not found: {rdir}")
        files = sorted(rdir.glob("*.md"))
        if not files:
            raise ConfigError(f"no *.md reports in {rdir}")
        texts = {}
        for f in files:
            if f.stem not in transcripts:
                raise ConfigError(f"report {f} has no transcript named {f.stem}.json")
            try:
                texts[f.stem] = f.read_text(encoding="utf-8")
            except (OSError, UnicodeDecodeError) as exc:
                raise ConfigError(f"unreadable report {f}: {exc}") from exc
        report_sets.append((label, texts))

    try:
        tagger = get_tagger(args.tagger)
    except TaggerUnavailable as exc:
        raise ConfigError(str(exc)) from exc
    out_dir = Path(cfg.out_dir)

    rows: list[list[Any]] = [["label", "#Sents", "FKGL", "CLI", "ARI", "Abst"]]
    for label, texts in report_sets:
        try:
            m = mean_style_stats([style_stats(t, transcripts[s].full_text()) for s, t in texts.items()])
        except EcReportError as exc:
            raise ConfigError(f"{label}: {exc}") from exc
        rows.append([label] + [f"{v:.2f}" for v in (m.sentence_count, m.fkgl, m.cli, m.ari, m.abstractiveness)])
    atomic_write_text(out_dir / "metrics.csv", _csv_text(rows))

    lexicon = build_aspect_lexicon(transcripts.values(), k=args.top_k, tagger=tagger)
    atomic_write_text(out_dir / "lexicon.csv", _csv_text([["aspect", "count"], *map(list, lexicon.aspects)]))
    profiles = [aspect_profile(list(texts.values()), lexicon, label) for label, texts in report_sets]
    matrix: list[list[Any]] = [["aspect"] + [p.system_label for p in profiles]]
    for lemma in lexicon.lemmas:
        matrix.append([lemma] + [f"{p.occurrence[lemma]:.4f}" for p in profiles])
    atomic_write_text(out_dir / "aspects.csv", _csv_text(matrix))
    logger.info("wrote metrics.csv, aspects.csv and lexicon.csv to %s", out_dir)
    return EXIT_OK


# --------------------------------------------------------------------------
# evaluate
# --------------------------------------------------------------------------


def _report_files(specs: Sequence[str]) -> dict[str, Path]:
    out: dict[str, Path] = {}
    for spec in specs:
        p = Path(spec)
        if p.is_dir():
            found = sorted(p.glob("*.md"))
            if not found:
                raise ConfigError(f"no *.md reports in {p}")
            out.update({f.stem: f for f in found})
        elif p.is_file():
            out[p.stem] = p
        else:
            raise ConfigError(f"report path not found: {p}")
    return dict(sorted(out.items()))


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"unreadable report {path}: {exc}") from exc


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    if not cfg.judges:
        raise ConfigError("at least one --judge MODEL@PROVIDER is required")
    judges = [parse_judge(j) for j in cfg.judges]
    if bool(args.reports) == bool(args.pairs):
        raise ConfigError("give exactly one of --reports or --pairs")
    retry = RetryPolicy(retries=0) if all("@scripted:" in j for j in cfg.judges) else RetryPolicy()

    if args.reports:
        reports = {rid: _read(p) for rid, p in _report_files(args.reports).items()}
        characteristics = [Characteristic(c) for c in args.characteristics] if args.characteristics else list(Characteristic)
        items = [(m, f, rid, c) for m, f in judges for rid in reports for c in characteristics]

        def judge_one(item) -> dict[str, Any]:
            model, factory, rid, c = item
            try:
                backend = factory(f"{rid}/{c.value}")
                return judge_characteristic(reports[rid], c, backend, model, rid, retry=retry).to_dict()
            except EcReportError as exc:
                return {"report_id": rid, "characteristic": c.value, "label": None, "score": None,
                        "judge": model, "error": str(exc)}
    else:
        gen_dir, ref_dir = (Path(p) for p in args.pairs)
        generated, reference = _report_files([str(gen_dir)]), _report_files([str(ref_dir)])
        common = sorted(set(generated) & set(reference))
        for stray in sorted(set(generated) ^ set(reference)):
            logger.warning("report %s has no counterpart; skipped", stray)
        if not common:
            raise ConfigError(f"no report names shared by {gen_dir} and {ref_dir}")
        texts = {pid: (_read(generated[pid]), _read(reference[pid])) for pid in common}
        items = [(m, f, pid, order) for m, f in judges for pid in common for order in (1, 2)]

        def judge_one(item) -> dict[str, Any]:
            model, factory, pid, order = item
            gen, ref = texts[pid]
            first = Source.GENERATED if order == 1 else Source.REFERENCE
            a, b = (gen, ref) if order == 1 else (ref, gen)
            try:
                backend = factory(f"{pid}#{order}")
                rec = judge_preference(a, b, backend, model, pid, first, retry=retry).to_dict()
            except EcReportError as exc:
                rec = {"pair_id": pid, "judge": model, "first_shown": first.value, "choice": None,
                       "rationale": "", "error": str(exc)}
            return {**rec, "ordering": order}

    records = _map(judge_one, items, cfg.jobs)
    ok = [r for r in records if not r.get("error")]
    for r in records:
        if r.get("error"):
            logger.warning("judgment failed: %s", r["error"])
    out = Path(args.out)
    write_jsonl(out, records)
    logger.info("%d of %d judgments usable; written to %s", len(ok), len(records), out)
    return EXIT_OK if ok else EXIT_FAILURES


# --------------------------------------------------------------------------
# correlate / bias
# --------------------------------------------------------------------------


def _fmt(value: Any, digits: int = 4) -> str:
    if isinstance(value, NotDefined):
        return "NotDefined"
    if isinstance(value, float) and math.isnan(value):
        return "NA"
    return f"{value:.{digits}f}"


def _load_judgments(path: str) -> tuple[list[CharacteristicJudgment], list[dict[str, Any]]]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"judgment file not found: {p}")
    good, failed = [], []
    for rec in read_jsonl(p):
        if rec.get("label") is None and rec.get("score") is None:
            failed.append(rec)
            continue
        try:
            good.append(CharacteristicJudgment.from_dict(rec))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{p}: bad judgment record {rec!r} ({exc})") from exc
    return good, failed


def cmd_correlate(args: argparse.Namespace) -> int:
    llm, llm_failed = _load_judgments(args.llm)
    human, _ = _load_judgments(args.human)
    judged = {j.characteristic for j in llm} | {j.characteristic for j in human}
    characteristics = [c for c in Characteristic if c in judged]
    if not characteristics:
        raise ConfigError("no usable judgments to correlate")

    rows: list[list[Any]] = [["judge", "human", "characteristic", "pearson", "spearman", "kendall", "n", "excluded"]]
    for model in sorted({j.judge for j in llm} | {r["judge"] for r in llm_failed}):
        mine = [j for j in llm if j.judge == model]
        per_human: dict[str, list[tuple[Characteristic, CorrelationStats]]] = {}
        for c in characteristics:
            skipped = {r["report_id"] for r in llm_failed if r["judge"] == model and r["characteristic"] == c.value}
            try:
                if args.per_evaluator:
                    results = correlate_per_evaluator(mine, human, c, skipped)
                else:
                    results = {"mean": correlate_judges(mine, human, c, skipped)}
            except MisalignedReports as exc:
                raise ConfigError(f"judge {model}: {exc}") from exc
            except EcReportError as exc:
                raise ConfigError(f"judge {model}, {c.value}: {exc}") from exc
            for who, s in results.items():
                per_human.setdefault(who, []).append((c, s))
        for who, entries in per_human.items():
            for c, s in entries:
                rows.append([model, who, c.value, _fmt(s.pearson), _fmt(s.spearman), _fmt(s.kendall), s.n, s.excluded])
            avg = [mean_coefficient([getattr(s, k) for _, s in entries]) for k in ("pearson", "spearman", "kendall")]
            rows.append([model, who, "Average", *map(_fmt, avg), "", ""])
    atomic_write_text(args.out, _csv_text(rows))
    logger.info("correlation table written to %s", args.out)
    return EXIT_OK


def cmd_bias(args: argparse.Namespace) -> int:
    p = Path(args.outcomes)
    if not p.is_file():
        raise ConfigError(f"outcome file not found: {p}")
    by_judge: dict[str, list[PreferenceOutcome]] = {}
    failed: dict[str, int] = {}
    for rec in read_jsonl(p):
        judge = rec.get("judge", "")
        if rec.get("choice") is None:
            failed[judge] = failed.get(judge, 0) + 1
            by_judge.setdefault(judge, [])
            continue
        try:
            by_judge.setdefault(judge, []).append(PreferenceOutcome.from_dict(rec))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{p}: bad outcome record {rec!r} ({exc})") from exc
    if not by_judge:
        raise ConfigError(f"{p}: no outcomes")

    rows: list[list[Any]] = [["judge", "report", "#1", "#2", "consistency", "first_position_rate", "unparseable"]]
    for judge in sorted(by_judge):
        outcomes = by_judge[judge]
        n_pairs = len({o.pair_id for o in outcomes})
        b = summarize_preferences(outcomes, judge, n_pairs, failed.get(judge, 0))
        for source, rates in ((Source.GENERATED, b.generated_rate), (Source.REFERENCE, b.reference_rate)):
            rows.append([judge, source.value, _fmt(rates[1], 2), _fmt(rates[2], 2),
                         _fmt(b.consistency_rate, 2), _fmt(b.first_position_rate, 2), b.unparseable])
    atomic_write_text(args.out, _csv_text(rows))
    logger.info("bias table written to %s", args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# replay
# --------------------------------------------------------------------------


def render_trace_markdown(trace) -> str:
    lines = [
        f"# Conversation trace: {trace.transcript_id}",
        "",
        f"- rounds used: {trace.rounds_used}",
        f"- terminated by: {trace.terminated_by.value if trace.terminated_by else 'unfinished'}",
        f"- round cap: {trace.round_cap}",
        "",
    ]
    for m in trace.messages:
        lines += [f"## Turn {m.turn}: {m.sender.value} ({m.kind.value})", "", m.text.rstrip("\n"), ""]
    return "\n".join(lines)


def cmd_replay(args: argparse.Namespace) -> int:
    p = Path(args.trace)
    if not p.is_file():
        raise ConfigError(f"trace file not found: {p}")
    text = render_trace_markdown(load_trace(p))
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default settings; flags override it")
    common.add_argument("--jobs", type=int, help="concurrent runs or judgments (default 1)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="ecreport", description="Earnings call report generation and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="generate reports from transcripts")
    g.add_argument("transcripts", nargs="*", help="transcript JSON files (default: every file in --transcripts-dir)")
    g.add_argument("--transcripts-dir")
    g.add_argument("--agents", help="comma-separated agents, e.g. writer,analyst,editor")
    g.add_argument("--rounds", type=int, help="round cap N (default 10)")
    g.add_argument("--revision-mode", choices=[m.value for m in RevisionMode])
    g.add_argument("--provider", help="openai, mistral, gemini or scripted:PATH")
    g.add_argument("--model")
    g.add_argument("--temperature", type=float)
    g.add_argument("--audience")
    g.add_argument("--earnings", help="earnings fixture file or dir, or 'remote'")
    g.add_argument("--cache-dir", help="cache for remote earnings downloads")
    g.add_argument("--features-dir", help="dir of <transcript>.json acoustic feature files")
    g.add_argument("--out-dir")
    g.add_argument("--record-dir", help="save each run's LLM session here for later replay")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("characterize", parents=[common], help="style metrics and aspect profiles")
    c.add_argument("--reports", action="append", required=True, metavar="LABEL=DIR",
                   help="labelled report dir of <transcript>.md files; repeatable")
    c.add_argument("--transcripts-dir")
    c.add_argument("--out-dir")
    c.add_argument("--top-k", type=int, default=250)
    c.add_argument("--tagger", default="auto", help="auto, spacy, nltk or heuristic")
    c.set_defaults(func=cmd_characterize)

    e = sub.add_parser("evaluate", parents=[common], help="LLM judging")
    e.add_argument("--reports", nargs="+", help="report files or dirs for characteristic judging")
    e.add_argument("--pairs", nargs=2, metavar=("GENERATED_DIR", "REFERENCE_DIR"),
                   help="preference judging of same-named reports, both orderings")
    e.add_argument("--characteristics", nargs="+", choices=[c.value for c in Characteristic])
    e.add_argument("--judge", dest="judges", action="append", metavar="MODEL@PROVIDER")
    e.add_argument("--out", required=True, help="output JSON Lines file")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("correlate", parents=[common], help="LLM vs human judgment correlations")
    r.add_argument("--llm", required=True)
    r.add_argument("--human", required=True)
    r.add_argument("--per-evaluator", action="store_true", help="one row set per human judge")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_correlate)

    b = sub.add_parser("bias", parents=[common], help="positional bias table")
    b.add_argument("--outcomes", required=True)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bias)

    p = sub.add_parser("replay", parents=[common], help="render a trace as markdown")
    p.add_argument("trace")
    p.add_argument("--out")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"ecreport: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
