"""``schcdns`` command line.

Exit codes: 0 ok, 1 configuration error, 2 runtime error.
"""

import argparse
import logging
import signal
import sys
import threading
from pathlib import Path

from . import __version__
from .bench import (
    ScenarioConfig,
    build_live_resolver,
    load_samples,
    metric_values,
    run_live,
    run_scenario,
    summary_line,
    write_samples,
)
from .config import load_sim_config, parse_hostport, read_kv, resolver_config
from .dns import AuthoritativeServer, ZoneTable, write_zone_file
from .errors import ConfigError, InvalidBody, RuleSyntaxError, SchcDnsError
from .latency import parse_distribution
from .registry import RegistryServer, RuleDocument, RuleStore
from .schc import parse_rule_file, serialize_rule
from .stats import cdf, emit_plot_data, summarize

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("schcdns")


def _overrides(pairs):
    out = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        out[key.strip()] = value.strip()
    return out


def _emit_csv(samples, out):
    if out in (None, "-"):
        write_samples(samples, sys.stdout)
    else:
        with Path(out).open("w", newline="") as fh:
            write_samples(samples, fh)


def cmd_run(args):
    overrides = _overrides(args.set)
    if args.live:
        values = read_kv(args.config) if args.config else {}
        values.update(overrides)
        cfg = resolver_config(values)
        if cfg.registry is None:
            log.info("no registry configured; relying on URLs published in DNS")
        rule = None
        if args.rules:
            ctx = parse_rule_file(Path(args.rules).read_bytes())
            rule = ctx.rules[0]
        samples = run_live(build_live_resolver(cfg), 1000 if args.n is None else args.n, rule,
                           scenario=args.scenario or 0)
    else:
        sim = load_sim_config(args.config, overrides)
        scenario = args.scenario or sim.scenario
        if scenario is None:
            raise ConfigError("no scenario given (--scenario or scenario= in the config)")
        cfg = ScenarioConfig(
            scenario=scenario,
            n=args.n if args.n is not None else (sim.n or 1000),
            model=sim.model,
            latency=sim.latency,
            seed=args.seed if args.seed is not None else sim.seed,
            batches=args.batches,
            jobs=args.jobs,
        )
        samples = run_scenario(cfg)
    _emit_csv(samples, args.out)
    print(summary_line(samples), file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


def _read_inputs(paths):
    samples = []
    for path in paths:
        try:
            samples.extend(load_samples(path))
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
    return samples


def cmd_cdf(args):
    values = metric_values(_read_inputs(args.samples), args.metric)
    series = cdf(values)
    if args.out in (None, "-"):
        print("value_ms,cdf")
        for p in series:
            print(f"{float(p.value_ms)!r},{float(p.cdf)!r}")
    else:
        emit_plot_data(series, args.out)
    return EXIT_OK


def cmd_report(args):
    print("file,metric,n,mean,median,p99,min,max")
    for path in args.samples:
        samples = _read_inputs([path])
        for metric in ("srt", "rtt", "dns", "http"):
            values = metric_values(samples, metric)
            if not values:
                continue
            s = summarize(values)
            print(f"{path},{metric},{s['n']},{s['mean']:.3f},{s['median']:.3f},"
                  f"{s['p99']:.3f},{s['min']:.3f},{s['max']:.3f}")
    return EXIT_OK


def _wait_forever(servers):
    stop = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: stop.set())
    try:
        stop.wait()
    finally:
        for server in servers:
            server.stop()


def cmd_serve_registry(args):
    zone = ZoneTable()
    zone_file = Path(args.zone_file) if args.zone_file else None

    def on_change(store):
        if zone_file is not None:
            write_zone_file(zone_file, zone.snapshot())

    host, port = parse_hostport(args.bind, 8080)
    store = RuleStore(args.data_dir, zone=zone, dns_zone=args.zone, on_change=on_change)
    server = RegistryServer(store, host, port)
    store.set_base_url(args.base_url or server.base_url)
    for path in args.load or ():
        ctx = parse_rule_file(Path(path).read_bytes())
        for rule in ctx.rules:
            store.put_rule(RuleDocument(ctx.deveui, rule.rule_id,
                                        serialize_rule(ctx.deveui, rule)))
    servers = [server.start()]
    print(f"registry listening on {server.base_url} ({len(store)} rules)", flush=True)
    if args.dns_bind:
        dhost, dport = parse_hostport(args.dns_bind, 53)
        dns_server = AuthoritativeServer(zone, dhost, dport).start()
        servers.append(dns_server)
        print(f"dns listening on {dns_server.address[0]}:{dns_server.address[1]}", flush=True)
    _wait_forever(servers)
    return EXIT_OK


def cmd_serve_dns(args):
    host, port = parse_hostport(args.bind, 53)
    delay = parse_distribution(args.delay) if args.delay else None
    server = AuthoritativeServer(ZoneTable(), host, port, delay=delay, seed=args.seed,
                                 zone_file=args.zone_file).start()
    print(f"dns listening on {server.address[0]}:{server.address[1]} "
          f"({len(server.zone)} records)", flush=True)
    _wait_forever([server])
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="schcdns",
                                description="SCHC context resolution over DNS: simulator, "
                                            "services and statistics")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write sample CSV")
    r.add_argument("--scenario", type=int, choices=(1, 2, 3, 4))
    r.add_argument("-n", type=int, help="number of exchanges (default 1000)")
    r.add_argument("--config", help="key=value config file")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    r.add_argument("--seed", type=int)
    r.add_argument("--batches", type=int, default=1,
                   help="split into independent batches seeded seed, seed+1, ...")
    r.add_argument("--jobs", type=int, default=1, help="run batches in parallel processes")
    r.add_argument("--out", "-o", help="CSV output path (default stdout)")
    r.add_argument("--live", action="store_true",
                   help="drive real DNS and HTTP services instead of the simulator")
    r.add_argument("--rules", help="device rule file for --live (default: built-in rule)")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("cdf", help="plot data (value_ms,cdf) from sample CSVs")
    c.add_argument("samples", nargs="+")
    c.add_argument("--metric", default="srt", choices=("srt", "rtt", "dns", "http"))
    c.add_argument("--out", "-o")
    c.set_defaults(func=cmd_cdf)

    rep = sub.add_parser("report", help="summary statistics of sample CSVs")
    rep.add_argument("samples", nargs="+")
    rep.set_defaults(func=cmd_report)

    sr = sub.add_parser("serve-registry", help="HTTP rule registry")
    sr.add_argument("--data-dir", help="persist rules here (default: memory only)")
    sr.add_argument("--bind", default="127.0.0.1:8080")
    sr.add_argument("--zone", default="schc.example.")
    sr.add_argument("--zone-file", help="keep this zone file in sync for serve-dns")
    sr.add_argument("--dns-bind", help="also answer DNS for the zone on this address")
    sr.add_argument("--base-url", help="URL advertised in DNS (default: the bound address)")
    sr.add_argument("--load", action="append", help="rule file to publish at startup")
    sr.set_defaults(func=cmd_serve_registry)

    sd = sub.add_parser("serve-dns", help="authoritative DNS responder for a zone file")
    sd.add_argument("--zone-file", required=True)
    sd.add_argument("--bind", default="127.0.0.1:5353")
    sd.add_argument("--delay", help="injected delay distribution, e.g. constant:10ms")
    sd.add_argument("--seed", type=int, default=0)
    sd.set_defaults(func=cmd_serve_dns)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, RuleSyntaxError, InvalidBody) as exc:
        print(f"schcdns: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SchcDnsError, OSError) as exc:
        print(f"schcdns: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
