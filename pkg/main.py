"""
Main Application Entry Point
Maurer-Cartan checks, transport, Riemann-Hilbert, horn filling, spectral
pages and convergence reports from JSON inputs
"""
import os
import sys

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.utils import Config, Logger, load_json, save_json, ensure_dir
from src.graded_linear import scalars_for
from src.gallery import document, unwrap, write_gallery
from src.holonomy import HolonomyEngine
from src.locsys import InfinityLocalSystem, LocalSystemEngine
from src.nerve import NerveEngine, NerveSimplex, SmallDgCategory
from src.simplicial import SimplicialComplex
from src.superconn import SuperconnEngine, Superconnection

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INVARIANT = 2
EXIT_UNCONVERGED = 3


class HigherHolonomy:
    """Main application class wiring config, logging and the engines"""

    def __init__(self, config_path: str = "config.json", logger: Logger | None = None):
        self.config = Config(config_path)
        self.logger = logger or Logger(log_file=self.config.get('log_file'), verbose=True)
        self.scalars = scalars_for(self.config.get('scalar_backend', 'exact'),
                                   self.config.get('eps_num'), self.config.get('eps_rank'))

        self.locsys = LocalSystemEngine(self.config, self.logger)
        self.superconn = SuperconnEngine(self.config, self.logger)
        self.holonomy = HolonomyEngine(self.config, self.logger)
        self.nerve = NerveEngine(self.config, self.logger)

    def _load(self, path: str, kind: str) -> dict:
        return unwrap(load_json(path), kind)

    def _load_system(self, path: str) -> InfinityLocalSystem:
        return InfinityLocalSystem.from_dict(self._load(path, 'local_system'), self.scalars)

    def _load_conn(self, path: str) -> Superconnection:
        return Superconnection.from_dict(self._load(path, 'superconnection'),
                                         self.config.get('bundle_degree_cap', 4))

    def _load_complex(self, path: str) -> SimplicialComplex:
        return SimplicialComplex.from_dict(self._load(path, 'complex'))

    def check_mc(self, path: str) -> int:
        """Print per-simplex MC residual norms"""
        system = self._load_system(path)
        ok, issues = self.locsys.check(system)
        norms = self.locsys.residual_norms(system)
        for key, value in norms.items():
            print(f"  {key}: {value:.3e}")
        if ok:
            print("MC residual: 0 (exact)" if self.scalars.exact else
                  f"MC residual: {max(norms.values(), default=0.0):.3e}")
            return EXIT_OK
        print(f"MC residual nonzero on {len(issues)} simplices")
        return EXIT_INVARIANT

    def transport(self, conn_path: str, path_path: str, nodes: int | None) -> int:
        conn = self._load_conn(conn_path)
        points = self._load(path_path, 'path').get('points')
        if not points or len(points) < 2:
            raise ValueError(f"{path_path}: a path needs at least two points")
        value = self.holonomy.transport(conn, points, nodes)
        for row in value.matrix:
            print("  " + "  ".join(f"{v: .12f}" for v in row))
        print(f"Series terms used: {value.terms_used}")
        return EXIT_UNCONVERGED if value.flags else EXIT_OK

    def rh(self, conn_path: str, complex_path: str, nodes: int | None, out: str | None) -> int:
        conn = self._load_conn(conn_path)
        if not self.superconn.check_flat(conn)[0]:
            return EXIT_INVARIANT
        system = self.holonomy.rh(conn, self._load_complex(complex_path), nodes)
        if out:
            save_json(out, document('local_system', system.to_dict()))
            self.logger.success(f"Wrote {out}")
        norms = self.locsys.residual_norms(system)
        print(f"Max MC residual: {max(norms.values(), default=0.0):.3e}")
        if any(system.flags.values()):
            return EXIT_UNCONVERGED
        return EXIT_OK

    def horn_fill(self, category_path: str, horn_path: str, q: int | None, out: str | None) -> int:
        category = SmallDgCategory.from_dict(self._load(category_path, 'dg_category'), self.scalars, self.logger)
        data = self._load(horn_path, 'nerve_simplex')
        q = q if q is not None else data.get('q')
        if q is None:
            raise ValueError(f"{horn_path}: no horn index q given")
        horn = NerveSimplex.from_dict(data, category)
        filled, issues = self.nerve.fill(horn, int(q))
        if filled is None:
            for issue in issues:
                print(f"  {issue!r}")
            return EXIT_INVARIANT
        missing = tuple(v for v in range(horn.dim + 1) if v != int(q))
        print(f"Missing face {missing}: {filled.component(missing)!r}")
        if out:
            save_json(out, document('nerve_simplex', filled.to_dict()))
            self.logger.success(f"Wrote {out}")
        return EXIT_OK

    def spectral(self, source_path: str, target_path: str, page: int) -> int:
        source, target = self._load_system(source_path), self._load_system(target_path)
        result, issues = self.locsys.spectral(source, target, page)
        print(f"E{result.index}:")
        for (p, a), n in sorted(result.terms.items()):
            print(f"  E^{{{p},{a}}} = {n}")
        return EXIT_INVARIANT if issues else EXIT_OK

    def report(self, conn_path: str, complex_path: str, csv_path: str | None) -> int:
        conn = self._load_conn(conn_path)
        if not self.superconn.check_flat(conn)[0]:
            return EXIT_INVARIANT
        result = self.holonomy.report(conn, self._load_complex(complex_path))
        print(result.to_csv(), end="")
        print(result.to_text(), end="")
        if csv_path:
            directory = os.path.dirname(csv_path)
            if directory:
                ensure_dir(directory)
            with open(csv_path, 'w', encoding='utf-8') as f:
                f.write(result.to_csv())
        return EXIT_UNCONVERGED if result.flags else EXIT_OK

    def gallery(self, directory: str | None) -> int:
        directory = directory or self.config.get('gallery_dir', 'gallery')
        for path in write_gallery(directory):
            print(f"  {path}")
        return EXIT_OK


def build_parser():
    import argparse

    parser = argparse.ArgumentParser(
        description="HigherHolonomy - ∞-local systems from flat superconnections",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Check the Maurer-Cartan equation of a local system
  python main.py check-mc gallery/promoted_circle.json

  # Parallel transport along a path
  python main.py transport gallery/rotation.json --path gallery/unit_edge.json -N 8

  # Riemann-Hilbert on a triangulated chart
  python main.py rh gallery/flat_rank2.json gallery/delta2.json -N 8 --out locsys.json

  # Convergence table
  python main.py report gallery/flat_rank2.json gallery/delta2.json --csv report.csv

Exit codes: 0 ok, 1 parse error, 2 invariant violation, 3 numeric non-convergence
        """
    )
    parser.add_argument('--config', default='config.json', help='Path to config file')
    parser.add_argument('--quiet', action='store_true', help='Only print results')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('check-mc', help='Maurer-Cartan residual per simplex')
    p.add_argument('system')

    p = sub.add_parser('transport', help='Parallel transport along a polyline path')
    p.add_argument('connection')
    p.add_argument('--path', required=True)
    p.add_argument('-N', '--nodes', type=int)

    p = sub.add_parser('rh', help='∞-local system of a flat superconnection')
    p.add_argument('connection')
    p.add_argument('complex')
    p.add_argument('-N', '--nodes', type=int)
    p.add_argument('--out')

    p = sub.add_parser('horn-fill', help='Fill an inner horn in the dg-nerve')
    p.add_argument('category')
    p.add_argument('horn')
    p.add_argument('--q', type=int)
    p.add_argument('--out')

    p = sub.add_parser('spectral', help='E0 or E1 of Hom(F, G)')
    p.add_argument('source')
    p.add_argument('target')
    p.add_argument('--page', type=int, choices=[0, 1], default=1)

    p = sub.add_parser('report', help='Convergence table of the RH object')
    p.add_argument('connection')
    p.add_argument('complex')
    p.add_argument('--csv')

    p = sub.add_parser('gallery', help='Write the example gallery')
    p.add_argument('--out')
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    app = HigherHolonomy(args.config)
    if args.quiet:
        app.logger.verbose = False
    try:
        if args.command == 'check-mc':
            return app.check_mc(args.system)
        if args.command == 'transport':
            return app.transport(args.connection, args.path, args.nodes)
        if args.command == 'rh':
            return app.rh(args.connection, args.complex, args.nodes, args.out)
        if args.command == 'horn-fill':
            return app.horn_fill(args.category, args.horn, args.q, args.out)
        if args.command == 'spectral':
            return app.spectral(args.source, args.target, args.page)
        if args.command == 'report':
            return app.report(args.connection, args.complex, args.csv)
        return app.gallery(args.out)
    except FileNotFoundError as e:
        app.logger.error(f"File not found: {e.filename}")
        return EXIT_PARSE
    except (ValueError, KeyError, TypeError) as e:
        app.logger.error(f"Could not parse input: {e}")
        return EXIT_PARSE


def main():
    """Main entry point for CLI"""
    sys.exit(run())


if __name__ == "__main__":
    main()
