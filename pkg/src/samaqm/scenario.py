"""The dumbbell experiment: many sources, one AQM bottleneck, one sink."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

from .aqm import Aqm, Blue, BlueParams, DropTail, Pi, PiParams, Red, RedParams
from .config import ScenarioConfig
from .engine import Bottleneck, EventKind, Simulator
from .metrics import MetricsLog, RunSummary, summary
from .sam import Sam
from .svm import SvmModel, load_model
from .transport import Demux, TcpSource, TrafficMix, build_sources


def make_controller(cfg: ScenarioConfig, name: str, sim: Simulator,
                    model: Optional[SvmModel] = None) -> Aqm:
    rng = sim.stream("aqm")
    if name == "droptail":
        return DropTail(rng)
    if name == "red":
        lo, hi = cfg.red_thresholds
        return Red(RedParams(lo, hi, cfg.red_max_p, cfg.red_w_q, cfg.red_count_correction,
                             idle_slot=cfg.packet_bytes * 8 / cfg.bandwidth_bps), rng)
    if name == "blue":
        return Blue(BlueParams(cfg.blue_d1, cfg.blue_d2, cfg.blue_freeze_time), rng)
    if name == "pi":
        params = PiParams(cfg.pi_a, cfg.pi_b, cfg.pi_reference, cfg.pi_sample_interval)
        return Pi(params.scaled(cfg.pi_scale), rng)
    if name == "sam":
        if model is None:
            if not cfg.sam_model_path:
                raise ValueError("controller sam needs sam.model_path or a model")
            model = load_model(cfg.sam_model_path)
        return Sam(model, rng)
    raise ValueError(f"unknown controller {name!r}")


@dataclass
class RunResult:
    summary: RunSummary
    log: MetricsLog
    link: Bottleneck
    sources: List[TcpSource]
    sim: Simulator


def build(cfg: ScenarioConfig, controller: Optional[str] = None,
          model: Optional[SvmModel] = None, trace: bool = False):
    name = controller or cfg.controller
    sim = Simulator(cfg.seed, trace=trace)
    log = MetricsLog(cfg.duration_s, cfg.sample_interval_s)
    aqm = make_controller(cfg, name, sim, model)
    demux = Demux()
    link = Bottleneck(sim, cfg.bandwidth_bps, cfg.buffer_packets, aqm, log,
                      on_departure=demux.departure, on_drop=demux.drop)
    mix = TrafficMix(cfg.n_http, cfg.n_ftp, cfg.http_size_mean, cfg.http_idle_mean)
    demux.sources = build_sources(sim, link, mix, packet_bytes=cfg.packet_bytes,
                                  link_delay=cfg.link_delay_s, start_jitter=cfg.start_jitter_s,
                                  initial_ssthresh=cfg.initial_ssthresh)

    n_ticks = int(round(cfg.duration_s / cfg.sample_interval_s))

    def tick(k: int) -> None:
        log.tick(len(link.buffer), sim.now)
        if k + 1 < n_ticks:
            sim.schedule((k + 1) * cfg.sample_interval_s, EventKind.SAMPLING_TICK, tick, k + 1)

    if n_ticks > 0:
        sim.schedule(0.0, EventKind.SAMPLING_TICK, tick, 0)
    return sim, link, log, demux.sources, name


def run_scenario(cfg: ScenarioConfig, controller: Optional[str] = None,
                 model: Optional[SvmModel] = None, trace: bool = False) -> RunResult:
    sim, link, log, sources, name = build(cfg, controller, model, trace)
    sim.run_until(cfg.duration_s)
    log.finish(cfg.duration_s)
    st = link.state()
    s = summary(log, name, st.occupancy, st.in_service, cfg.warmup_s)
    return RunResult(s, log, link, sources, sim)
