#!/usr/bin/env python3
"""
Distributed MAC CLI Tool

Command-line interface for capacity-region checks, error exponents, GEP
bounds and threshold-decoder simulation. Results go to stdout (JSON or CSV)
or to ``--out``; logs go to stderr.

Usage:
    dmac validate --channel adder.json --ensemble adder_ensemble.json
    dmac region check --channel adder.json --ensemble adder_ensemble.json --g 0,0 --rates 0.3,0.3
    dmac region sweep --channel adder.json --ensemble adder_ensemble.json --g 0,0 --user 1 \\
        --start 0 --stop 1 --steps 51
    dmac exponent --channel bsc.json --ensemble bsc_ensemble.json --kind mD --D 1 --g 0
    dmac gep --channel bsc.json --ensemble bsc_ensemble.json --region region.json --N 20
    dmac simulate --channel bsc.json --ensemble bsc_ensemble.json --region region.json \\
        --N 8 --trials 1000 --seed 1
    dmac oracle --channel tiny.json --ensemble tiny_ensemble.json --region region.json --N 2
    dmac calibrate --channel bsc.json --ensemble bsc_ensemble.json --region region.json \\
        --N 8 --trials 200 --out policy.json
    dmac gaussian --K 2 --P 1,1 --N0 1 --r 0.3,0.3

Exit status is 0 on success, 1 on domain errors and 2 on usage or input
format errors.
"""

import argparse
import logging
import os
import sys
import time
import traceback
from typing import Any, Dict, FrozenSet, List, Optional, Sequence

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from config import Config, config_map, get_config
from models.channel_models import ChannelModel
from models.code_models import CodeIndexVector, OperationConfig, RateUnit
from models.report_models import RunManifest
from models.simulation_models import ErrorMode, ThresholdPolicy
from scripts import __version__
from utils.code_space import enumerate_vectors, uniform_weights
from utils.decoder import generate_codebooks
from utils.exceptions import DmacError, InputFormatError
from utils.exponents import ExponentCache, ExponentKind, ExponentOptimizer, ExponentQuery
from utils.file_operations import DataExporter, FileManager, GridSpec, InputLoader
from utils.gep_bounds import STRATEGIES, gep_bound_d, gep_bound_single_user, gep_bound_sweep
from utils.helpers import (
    calculate_file_hash, canonical_json, format_duration, format_subset,
    format_timestamp, setup_logging,
)
from utils.info_theory import (
    build_joint, gaussian_region_check, in_cd_all, in_cd_subset, in_cd_user,
    mutual_information_table, shannon_polymatroid_check,
)
from utils.simulator import (
    calibrate_policy, codebook_averaged_oracle, event_decomposition, exact_oracle, run_monte_carlo,
)
from utils.validation import ChannelValidator, EnsembleValidator, VectorListValidator

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE_ERROR = 2

PREDICATES = ('user', 'subset', 'all', 'shannon')


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _subset(text: str) -> FrozenSet[int]:
    """'1,2' or '{1,2}' -> frozenset({1, 2}); '' -> empty set"""
    try:
        return frozenset(int(part) for part in text.strip('{} ').split(',') if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a user set such as 1,2, got {text!r}") from None


def _vector(text: str) -> CodeIndexVector:
    try:
        return CodeIndexVector.parse(text)
    except DmacError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


class DmacCLI:
    """Command-line interface for the distributed MAC toolkit"""

    def __init__(self, config: Optional[Config] = None, stdout=None):
        self.config = config
        self._stdout = stdout
        self.loader = InputLoader()
        self.file_manager = FileManager()
        self.exporter = DataExporter(self.file_manager)
        self.parser = self.build_parser()
        self._inputs: Dict[str, str] = {}
        self._outputs: Dict[str, str] = {}
        self._seeds: Dict[str, Optional[int]] = {}

    @property
    def stdout(self):
        return self._stdout or sys.stdout

    # ----- argument parsing -----

    def build_parser(self) -> argparse.ArgumentParser:
        """Build the argument parser with one subparser per command"""
        common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
        common.add_argument('--verbose', '-v', action='store_true',
                            help='Debug logging, progress bars and tracebacks on errors')
        common.add_argument('--config-env', choices=sorted(config_map),
                            help='Configuration profile (default: DMAC_ENV or default)')
        common.add_argument('--out', '-o', type=str,
                            help='Output file (.json, .yaml/.yml or .csv); stdout when omitted')
        common.add_argument('--manifest', type=str,
                            help='Write a run manifest with input and output digests to this file')
        common.add_argument('--threads', type=int,
                            help='Worker cap (default: DMAC_THREADS or 1)')

        model = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
        model.add_argument('--channel', required=True, help='Channel description (JSON or YAML)')
        model.add_argument('--ensemble', required=True, help='Code ensemble description (JSON or YAML)')
        model.add_argument('--units', choices=[u.value for u in RateUnit], default='nats',
                           help='Units of rates given in files and on the command line (default: nats)')

        operation = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
        operation.add_argument('--region', required=True, help='Operation region: list of code vectors')
        operation.add_argument('--margin', help='Operation margin: list of code vectors (default: empty)')
        operation.add_argument('--weights', default='uniform',
                               help="'uniform' (alpha = log|G| / N) or a weights file")
        operation.add_argument('--N', dest='N', type=int, help='Blocklength')

        decoding = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
        decoding.add_argument('--D', type=_subset, default=frozenset({1}),
                              help='Decode set, e.g. 1,2 (default: 1)')
        decoding.add_argument('--seed', type=int, default=0, help='Codebook and trial seed (default: 0)')
        decoding.add_argument('--mode', choices=[m.value for m in ErrorMode], default='eq10',
                              help='Error probability definition (default: eq10)')
        decoding.add_argument('--policy', help='Threshold policy file (default: all offsets 0)')
        decoding.add_argument('--table', help='Also write the per-g table as CSV to this file')
        decoding.add_argument('--bound', action='store_true',
                              help='Compute the analytic GEP_D bound for comparison')

        parser = argparse.ArgumentParser(
            prog='dmac',
            description="Capacity regions, error exponents and decoder simulation for distributed MACs",
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog="""
Examples:
  %(prog)s region check --channel adder.json --ensemble ens.json --g 0,0 --rates 0.3,0.3
  %(prog)s gep --channel bsc.json --ensemble ens.json --region region.json --N 20
  %(prog)s gaussian --K 2 --P 1,1 --N0 1 --r 0.3,0.3
            """,
            allow_abbrev=False,
        )
        parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
        subparsers = parser.add_subparsers(dest='command', metavar='command', help='Available commands')
        subparsers.required = True

        # Validate command
        validate_parser = subparsers.add_parser('validate', parents=[common], allow_abbrev=False,
                                                help='Check input documents and report every problem')
        validate_parser.add_argument('--channel', required=True, help='Channel description')
        validate_parser.add_argument('--ensemble', help='Code ensemble description')
        validate_parser.add_argument('--region', help='Operation region vector list')
        validate_parser.add_argument('--margin', help='Operation margin vector list')
        validate_parser.add_argument('--weights', help='Weights file')
        validate_parser.add_argument('--units', choices=[u.value for u in RateUnit], default='nats',
                                     help='Units of rates in the ensemble (default: nats)')

        # Region commands
        region_parser = subparsers.add_parser('region', allow_abbrev=False,
                                              help='Capacity-region membership')
        region_commands = region_parser.add_subparsers(dest='region_command', metavar='action')
        region_commands.required = True

        check_parser = region_commands.add_parser('check', parents=[common, model], allow_abbrev=False,
                                                  help='Membership verdict with witnesses')
        sweep_parser = region_commands.add_parser('sweep', parents=[common, model], allow_abbrev=False,
                                                  help='CSV of membership along one rate axis')
        for sub in (check_parser, sweep_parser):
            sub.add_argument('--g', type=_vector, required=True, help="Code vector, e.g. '0,1/0'")
            sub.add_argument('--predicate', choices=PREDICATES, default='all',
                             help='user: C_D^k, subset: C_D^S, all: C_D, shannon: fixed-input region')
            sub.add_argument('--users', type=_subset, help='Decoded set S for --predicate subset')
            sub.add_argument('--slack', type=float, default=0.0,
                             help='Require every inequality to hold with this margin (default: 0)')
        check_parser.add_argument('--user', type=int, default=1, help='User for --predicate user')
        check_parser.add_argument('--rates', type=_float_list,
                                  help="Override the rates of g's options, e.g. 0.3,0.3")
        sweep_parser.add_argument('--user', type=int, default=1,
                                  help='User whose rate is swept (also the user for --predicate user)')
        sweep_parser.add_argument('--option', type=int, help="Option whose rate is swept (default: g's)")
        sweep_parser.add_argument('--start', type=float, required=True, help='First rate')
        sweep_parser.add_argument('--stop', type=float, required=True, help='Last rate')
        sweep_parser.add_argument('--steps', type=int, required=True, help='Number of grid points')

        # Exponent command
        exponent_parser = subparsers.add_parser('exponent', parents=[common, model], allow_abbrev=False,
                                                help='Maximize one error exponent')
        exponent_parser.add_argument('--kind', choices=[k.value for k in ExponentKind], required=True,
                                     help='mD (wrong message), iD_S (interference), iD_D (misdetection)')
        exponent_parser.add_argument('--D', type=_subset, required=True, help='Decode set, e.g. 1,2')
        exponent_parser.add_argument('--S', type=_subset, default=frozenset(),
                                     help='Correctly decoded subset (default: empty; iD_D needs S = D)')
        exponent_parser.add_argument('--g', type=_vector, required=True, help='Transmitted code vector')
        exponent_parser.add_argument('--g-tilde', type=_vector, help='Competing code vector (default: g)')
        exponent_parser.add_argument('--alpha-g', type=float, default=0.0, help='Weight of g (default: 0)')
        exponent_parser.add_argument('--alpha-g-tilde', type=float, default=0.0,
                                     help='Weight of g~ (default: 0)')

        # GEP command
        gep_parser = subparsers.add_parser('gep', parents=[common, model, operation], allow_abbrev=False,
                                           help='Upper bound on the generalized error performance')
        gep_parser.add_argument('--D', type=_subset,
                                help='Bound the single (D, R_D) decoder instead of minimizing over partitions')
        gep_parser.add_argument('--strategy', choices=STRATEGIES, default='exhaustive',
                                help='Partition search strategy (default: exhaustive)')
        gep_parser.add_argument('--n-sweep', type=str,
                                help='START:STOP:STEPS blocklengths; emits bound-vs-N CSV (uniform weights)')

        # Simulation commands
        simulate_parser = subparsers.add_parser('simulate', parents=[common, model, operation, decoding],
                                                allow_abbrev=False, help='Monte Carlo threshold decoder')
        simulate_parser.add_argument('--trials', type=int, required=True, help='Trials per code vector')
        simulate_parser.add_argument('--events', action='store_true',
                                     help='Record P_m / P_t / P_i event frequencies')

        oracle_parser = subparsers.add_parser('oracle', parents=[common, model, operation, decoding],
                                              allow_abbrev=False, help='Exact error probabilities')
        oracle_parser.add_argument('--seeds', type=str,
                                   help='Comma-separated codebook seeds; averages the oracle over them')

        calibrate_parser = subparsers.add_parser('calibrate', parents=[common, model, operation, decoding],
                                                 allow_abbrev=False, help='Tune threshold offsets')
        calibrate_parser.add_argument('--trials', type=int, required=True,
                                      help='Calibration transmissions per code vector')
        calibrate_parser.add_argument('--offsets', type=str,
                                      help='Candidate offset grid START:STOP:STEPS (default: -1:1:41)')

        # Gaussian command
        gaussian_parser = subparsers.add_parser('gaussian', parents=[common], allow_abbrev=False,
                                                help='Gaussian MAC capacity region check')
        gaussian_parser.add_argument('--K', type=int, required=True, help='Number of users')
        gaussian_parser.add_argument('--P', type=_float_list, required=True, help='Powers, e.g. 1,1')
        gaussian_parser.add_argument('--N0', type=float, required=True, help='Noise power')
        gaussian_parser.add_argument('--r', type=_float_list, required=True, help='Rates, e.g. 0.3,0.3')

        return parser

    def parse_arguments(self, argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
        """Parse command line arguments"""
        return self.parser.parse_args(argv)

    # ----- shared loading -----

    def _record_input(self, name: str, path: Optional[str]) -> None:
        if path:
            self._inputs[name] = calculate_file_hash(path)

    def _units(self, args: argparse.Namespace) -> RateUnit:
        return RateUnit(args.units)

    def load_model(self, args: argparse.Namespace):
        """Channel and ensemble, checked against each other"""
        channel = self.loader.load_channel(args.channel)
        self._record_input('channel', args.channel)
        ensemble = self.loader.load_ensemble(args.ensemble, channel, self._units(args))
        self._record_input('ensemble', args.ensemble)
        ensemble.check_against(channel)
        return channel, ensemble

    def load_vectors(self, name: str, path: Optional[str]) -> List[CodeIndexVector]:
        if not path:
            return []
        vectors = self.loader.load_vectors(path)
        self._record_input(name, path)
        return vectors

    def load_weights(self, args: argparse.Namespace, ensemble, blocklength: int):
        if args.weights == 'uniform':
            return uniform_weights(enumerate_vectors(ensemble, self.config.VECTOR_CAP), blocklength)
        weights = self.loader.load_weights(args.weights, blocklength)
        self._record_input('weights', args.weights)
        return weights

    def load_operation(self, args: argparse.Namespace, decode_set: FrozenSet[int],
                       ensemble) -> OperationConfig:
        region = self.load_vectors('region', args.region)
        margin = self.load_vectors('margin', args.margin)
        for g in region + margin:
            ensemble.check_vector(g)
        return OperationConfig(region=frozenset(region), margin=frozenset(margin), decode_set=decode_set)

    def load_policy(self, args: argparse.Namespace) -> ThresholdPolicy:
        if not args.policy:
            return ThresholdPolicy()
        policy = self.loader.load_policy(args.policy)
        self._record_input('policy', args.policy)
        return policy

    def require_blocklength(self, args: argparse.Namespace) -> int:
        if args.N is None:
            self.parser.error(f"{args.command}: --N is required")
        return args.N

    def optimizer(self) -> ExponentOptimizer:
        return ExponentOptimizer.from_config(self.config)

    def exponent_cache(self) -> ExponentCache:
        return ExponentCache(maxsize=self.config.CACHE_SIZE, directory=self.config.CACHE_DIR)

    # ----- emission -----

    def emit(self, payload: Any, args: argparse.Namespace) -> None:
        """Write a JSON/YAML result to --out or print JSON to stdout"""
        if args.out:
            self._outputs[args.out] = self.file_manager.save(payload, args.out)
            logger.info(f"Result written to {args.out}")
        else:
            self.stdout.write(canonical_json(payload))

    def emit_csv(self, text: str, args: argparse.Namespace) -> None:
        if args.out:
            self._outputs[args.out] = self.file_manager.save_text(text, args.out)
            logger.info(f"Table written to {args.out}")
        else:
            self.stdout.write(text)

    def write_manifest(self, args: argparse.Namespace, started_at: str, elapsed: float) -> None:
        arguments = {
            key: (sorted(value) if isinstance(value, frozenset) else
                  str(value) if isinstance(value, CodeIndexVector) else value)
            for key, value in sorted(vars(args).items()) if key != 'manifest'
        }
        manifest = RunManifest(
            command=' '.join(filter(None, [args.command, getattr(args, 'region_command', None)])),
            arguments=arguments,
            configuration=self.config.to_dict(),
            seeds=self._seeds,
            version=__version__,
            started_at=started_at,
            wall_clock_seconds=elapsed,
            inputs=dict(self._inputs),
            outputs=dict(self._outputs),
        )
        self.file_manager.save_json(manifest.to_dict(), args.manifest)
        logger.info(f"Manifest written to {args.manifest}")

    # ----- commands -----

    def cmd_validate(self, args: argparse.Namespace) -> int:
        """Run every validator and report all problems at once"""
        result: Dict[str, Any] = {}
        channel = None
        channel_doc = self.loader.load_document(args.channel)
        result['channel'] = ChannelValidator.validate_description(channel_doc)
        if result['channel']['valid']:
            channel = ChannelModel.from_dict(channel_doc)
        if args.ensemble:
            result['ensemble'] = EnsembleValidator.validate_description(
                self.loader.load_document(args.ensemble), channel)
        for name in ('region', 'margin'):
            path = getattr(args, name)
            if path:
                document = self.loader.load_document(path)
                if isinstance(document, dict):
                    document = document.get('vectors', [])
                result[name] = VectorListValidator.validate_description(document)
        if args.weights:
            try:
                self.loader.load_weights(args.weights)
                result['weights'] = {'valid': True, 'errors': []}
            except DmacError as e:
                result['weights'] = {'valid': False, 'errors': [str(e)]}

        valid = all(part['valid'] for part in result.values())
        result['valid'] = valid
        self.emit(result, args)
        return EXIT_OK if valid else EXIT_DOMAIN_ERROR

    def _verdict(self, args: argparse.Namespace, channel, ensemble, g: CodeIndexVector, user: int):
        if args.predicate == 'user':
            return in_cd_user(channel, ensemble, g, user, slack=args.slack)
        if args.predicate == 'subset':
            if not args.users:
                self.parser.error("region: --predicate subset needs --users")
            return in_cd_subset(channel, ensemble, g, args.users, slack=args.slack)
        if args.predicate == 'shannon':
            rates = [ensemble.rate(g, k) for k in range(1, channel.num_users + 1)]
            dists = [ensemble.input_dists(g)[k] for k in range(1, channel.num_users + 1)]
            return shannon_polymatroid_check(channel, dists, rates, ensemble.channel_g0(channel, g))
        return in_cd_all(channel, ensemble, g, slack=args.slack)

    def cmd_region_check(self, args: argparse.Namespace) -> int:
        channel, ensemble = self.load_model(args)
        g = args.g
        ensemble.check_vector(g)
        if args.rates is not None:
            if len(args.rates) != channel.num_users:
                self.parser.error(f"region check: --rates needs {channel.num_users} value(s)")
            for k, rate in enumerate(args.rates, start=1):
                ensemble = ensemble.with_rate(k, g.option(k), self._units(args).to_nats(rate))

        verdict = self._verdict(args, channel, ensemble, g, args.user)
        information = mutual_information_table(build_joint(channel, g, ensemble))
        payload = verdict.to_dict()
        payload['g'] = str(g)
        payload['rates_nats'] = [ensemble.rate(g, k) for k in range(1, channel.num_users + 1)]
        payload['mutual_information'] = {
            format_subset(subset): value for subset, value in sorted(
                information.items(), key=lambda item: (len(item[0]), sorted(item[0])))
        }
        logger.info(f"Region check ({verdict.predicate}) for g={g}: member={verdict.member}")
        self.emit(payload, args)
        return EXIT_OK

    def cmd_region_sweep(self, args: argparse.Namespace) -> int:
        channel, ensemble = self.load_model(args)
        g = args.g
        ensemble.check_vector(g)
        option = g.option(args.user) if args.option is None else args.option
        units = self._units(args)
        grid = GridSpec(f"rate_{args.user}", args.start, args.stop, args.steps)

        def evaluate(rate: float) -> Dict[str, Any]:
            swept = ensemble.with_rate(args.user, option, units.to_nats(rate))
            verdict = self._verdict(args, channel, swept, g, args.user)
            return {'rate_nats': units.to_nats(rate), 'member': int(verdict.member)}

        self.emit_csv(self.exporter.sweep_emit(grid, evaluate), args)
        return EXIT_OK

    def cmd_exponent(self, args: argparse.Namespace) -> int:
        channel, ensemble = self.load_model(args)
        query = ExponentQuery(
            channel=channel, ensemble=ensemble, decode_set=args.D, subset=args.S,
            g=args.g, g_tilde=args.g_tilde or args.g,
            alpha_g=args.alpha_g, alpha_g_tilde=args.alpha_g_tilde, kind=args.kind,
        )
        optimizer = self.optimizer()
        cache = self.exponent_cache()
        report = cache.get_or_compute(ExponentCache.context_key(channel, ensemble, optimizer), query, optimizer)
        cache.save()
        payload = report.to_dict()
        payload.update({
            'D': format_subset(args.D), 'S': format_subset(args.S),
            'g': str(query.g), 'g_tilde': str(query.g_tilde),
        })
        self.emit(payload, args)
        return EXIT_OK

    def cmd_gep(self, args: argparse.Namespace) -> int:
        channel, ensemble = self.load_model(args)
        region = self.load_vectors('region', args.region)
        margin = self.load_vectors('margin', args.margin)
        optimizer = self.optimizer()
        cache = self.exponent_cache()
        threads = args.threads or self.config.THREADS

        if args.n_sweep:
            if args.weights != 'uniform':
                self.parser.error("gep: --n-sweep uses uniform weights; drop --weights")
            grid = GridSpec.parse('N', args.n_sweep, integer=True)
            vectors = enumerate_vectors(ensemble, self.config.VECTOR_CAP)

            def evaluate(n: int) -> Dict[str, Any]:
                if n < 1:
                    raise DmacError(f"blocklengths must be positive, got {n}")
                row = gep_bound_sweep(channel, ensemble, region, margin, [n],
                                      lambda m: uniform_weights(vectors, m),
                                      decode_set=args.D, strategy=args.strategy,
                                      optimizer=optimizer, cache=cache)[0]
                return {'bound': row['bound']}

            self.emit_csv(self.exporter.sweep_emit(grid, evaluate), args)
            cache.save()
            return EXIT_OK

        n = self.require_blocklength(args)
        weights = self.load_weights(args, ensemble, n)
        if args.D:
            report = gep_bound_d(channel, ensemble, args.D, region, margin, weights, n,
                                 optimizer=optimizer, cache=cache, threads=threads)
        else:
            report = gep_bound_single_user(channel, ensemble, region, margin, weights, n,
                                           strategy=args.strategy, cap=self.config.EXHAUSTIVE_CAP,
                                           optimizer=optimizer, cache=cache,
                                           max_passes=self.config.GREEDY_MAX_PASSES, threads=threads)
        cache.save()
        payload = report.to_dict()
        payload['weights'] = weights.to_dict()
        self.emit(payload, args)
        return EXIT_OK

    def _analytic_bound(self, args, channel, ensemble, config: OperationConfig, weights, n) -> Optional[float]:
        if not args.bound:
            return None
        return gep_bound_d(channel, ensemble, config.decode_set, config.region, config.margin, weights, n,
                           optimizer=self.optimizer(), cache=self.exponent_cache()).total

    def _emit_simulation(self, report, args: argparse.Namespace) -> None:
        payload = report.to_dict()
        if ErrorMode(report.mode).three_zone and report.event_probabilities:
            payload['event_decomposition'] = event_decomposition(report)
        if args.table:
            self._outputs[args.table] = self.exporter.export_table(report.table(), args.table)
        self.emit(payload, args)

    def cmd_simulate(self, args: argparse.Namespace) -> int:
        channel, ensemble = self.load_model(args)
        n = self.require_blocklength(args)
        config = self.load_operation(args, args.D, ensemble)
        weights = self.load_weights(args, ensemble, n)
        policy = self.load_policy(args)
        self._seeds['seed'] = args.seed

        report = run_monte_carlo(
            channel, ensemble, config, policy, weights, n, args.trials, args.seed,
            mode=ErrorMode(args.mode),
            analytic_bound=self._analytic_bound(args, channel, ensemble, config, weights, n),
            record_events=args.events,
            threads=args.threads or self.config.THREADS,
            verbose=args.verbose,
        )
        logger.info(f"Simulated GEP estimate: {report.gep:.6g}")
        self._emit_simulation(report, args)
        return EXIT_OK

    def cmd_oracle(self, args: argparse.Namespace) -> int:
        channel, ensemble = self.load_model(args)
        n = self.require_blocklength(args)
        config = self.load_operation(args, args.D, ensemble)
        weights = self.load_weights(args, ensemble, n)
        policy = self.load_policy(args)

        if args.seeds:
            seeds = [int(s) for s in _float_list(args.seeds)]
            self._seeds.update({f"seed_{i}": s for i, s in enumerate(seeds)})
            average = codebook_averaged_oracle(seeds, channel, ensemble, config, policy, weights, n,
                                               mode=ErrorMode(args.mode), cap=self.config.ORACLE_CAP)
            self.emit(average.to_dict(), args)
            return EXIT_OK

        self._seeds['seed'] = args.seed
        report = exact_oracle(
            channel, ensemble, config, policy, weights, n, args.seed,
            mode=ErrorMode(args.mode), cap=self.config.ORACLE_CAP,
            analytic_bound=self._analytic_bound(args, channel, ensemble, config, weights, n),
            verbose=args.verbose,
        )
        logger.info(f"Exact GEP: {report.gep:.6g}")
        self._emit_simulation(report, args)
        return EXIT_OK

    def cmd_calibrate(self, args: argparse.Namespace) -> int:
        channel, ensemble = self.load_model(args)
        n = self.require_blocklength(args)
        config = self.load_operation(args, args.D, ensemble)
        weights = self.load_weights(args, ensemble, n)
        self._seeds['seed'] = args.seed

        kwargs = {}
        if args.offsets:
            kwargs['offsets'] = GridSpec.parse('offset', args.offsets).points()
        codebooks = generate_codebooks(ensemble, n, args.seed, self.config.CODEBOOK_CAP)
        policy = calibrate_policy(channel, ensemble, config, weights, n, args.trials, args.seed,
                                  codebooks=codebooks, **kwargs)
        self.emit(policy.to_dict(), args)
        return EXIT_OK

    def cmd_gaussian(self, args: argparse.Namespace) -> int:
        if len(args.P) != args.K or len(args.r) != args.K:
            self.parser.error(f"gaussian: --P and --r need exactly K={args.K} value(s)")
        verdict = gaussian_region_check(args.P, args.N0, args.r)
        self.emit(verdict.to_dict(), args)
        return EXIT_OK

    # ----- entry point -----

    def dispatch(self, args: argparse.Namespace) -> int:
        if args.command == 'region':
            handler = self.cmd_region_check if args.region_command == 'check' else self.cmd_region_sweep
        else:
            handler = getattr(self, f"cmd_{args.command}")
        return handler(args)

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """Main execution method; returns the process exit status"""
        try:
            args = self.parse_arguments(argv)
        except SystemExit as e:
            return EXIT_USAGE_ERROR if e.code not in (0, None) else EXIT_OK

        self.config = self.config or get_config(args.config_env)
        self.exporter.digits = self.config.CSV_SIGNIFICANT_DIGITS
        setup_logging('DEBUG' if args.verbose else self.config.LOG_LEVEL)
        started_at = format_timestamp()
        started = time.perf_counter()

        try:
            status = self.dispatch(args)
            logger.info(f"{args.command} finished in {format_duration(time.perf_counter() - started)}")
            if args.manifest:
                self.write_manifest(args, started_at, time.perf_counter() - started)
            return status
        except SystemExit as e:
            return EXIT_USAGE_ERROR if e.code not in (0, None) else EXIT_OK
        except InputFormatError as e:
            logger.error(f"Input error: {e}")
            if args.verbose:
                traceback.print_exc()
            return EXIT_USAGE_ERROR
        except DmacError as e:
            logger.error(f"{type(e).__name__}: {e}")
            if args.verbose:
                traceback.print_exc()
            return EXIT_DOMAIN_ERROR
        except KeyboardInterrupt:
            logger.error("Operation cancelled by user")
            return EXIT_DOMAIN_ERROR


def main():
    """Entry point for the CLI script"""
    sys.exit(DmacCLI().run())


if __name__ == '__main__':
    main()
