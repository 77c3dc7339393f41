"""
Tests for the command-line surface: subcommands and exit codes
"""
import json
import os
import shutil
import tempfile
import unittest

from main import EXIT_INVARIANT, EXIT_OK, EXIT_PARSE, EXIT_UNCONVERGED, run
from src.gallery import document
from src.graded_linear import ChainComplex, GradedMap, GradedModule
from src.locsys import InfinityLocalSystem
from src.simplicial import SimplicialComplex
from src.superconn import Bundle, ChartDomain, CoefficientForm, Superconnection
from src.utils import save_json


class TestCommandLine(unittest.TestCase):
    """Test run() against gallery documents in a scratch directory"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.gallery = os.path.join(self.temp_dir, 'gallery')
        self.config = self.write_config('config.json', {'quadrature': {'max_word_length': 20}})
        self.assertEqual(run(['--config', self.config, '--quiet', 'gallery', '--out', self.gallery]), EXIT_OK)

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def write_config(self, name, data):
        path = os.path.join(self.temp_dir, name)
        data = {'log_file': os.path.join(self.temp_dir, 'logs', 'run.log'), **data}
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(data, f)
        return path

    def item(self, name):
        return os.path.join(self.gallery, name)

    def cli(self, *args, config=None):
        return run(['--config', config or self.config, '--quiet', *args])

    def test_gallery_written(self):
        """Test every gallery document carries the schema tag"""
        names = sorted(os.listdir(self.gallery))
        self.assertIn('flat_rank2.json', names)
        for name in names:
            with open(self.item(name), encoding='utf-8') as f:
                self.assertEqual(json.load(f)['schema'], 'v1')

    def test_check_mc(self):
        """Test a promoted local system passes"""
        self.assertEqual(self.cli('check-mc', self.item('promoted_circle.json')), EXIT_OK)

    def test_check_mc_violation(self):
        """Test a triangle whose edges do not compose exits with 2"""
        module = GradedModule({0: 1})
        f = {e: GradedMap.identity(module) for e in [(0, 1), (1, 2)]}
        f[(0, 2)] = GradedMap.identity(module).scale(2)
        system = InfinityLocalSystem(SimplicialComplex.standard(2), {v: ChainComplex(module) for v in range(3)}, f)
        path = os.path.join(self.temp_dir, 'broken.json')
        save_json(path, document('local_system', system.to_dict()))
        self.assertEqual(self.cli('check-mc', path), EXIT_INVARIANT)

    def test_transport(self):
        """Test transport along the unit edge"""
        self.assertEqual(self.cli('transport', self.item('rotation.json'), '--path', self.item('unit_edge.json'),
                                  '-N', '16'), EXIT_OK)

    def test_transport_truncated(self):
        """Test a too-short series cutoff exits with 3"""
        config = self.write_config('short.json', {'quadrature': {'max_word_length': 2}})
        self.assertEqual(self.cli('transport', self.item('rotation.json'), '--path', self.item('unit_edge.json'),
                                  config=config), EXIT_UNCONVERGED)

    def test_transport_unconverged(self):
        """Test a node count that moves under doubling exits with 3"""
        config = self.write_config('coarse.json', {'quadrature': {'max_word_length': 40}})
        self.assertEqual(self.cli('transport', self.item('rotation.json'), '--path', self.item('unit_edge.json'),
                                  '-N', '2', config=config), EXIT_UNCONVERGED)

    def test_rh_round_trip(self):
        """Test the RH output passes check-mc under double scalars"""
        out = os.path.join(self.temp_dir, 'out', 'locsys.json')
        self.assertEqual(self.cli('rh', self.item('flat_rank2.json'), self.item('delta2.json'), '--out', out),
                         EXIT_OK)
        self.assertTrue(os.path.exists(out))
        config = self.write_config('double.json', {'scalar_backend': 'double'})
        self.assertEqual(self.cli('check-mc', out, config=config), EXIT_OK)

    def test_rh_not_flat(self):
        """Test a curved superconnection exits with 2"""
        bundle = Bundle.from_dims({0: 1})
        chart = ChartDomain(2)
        conn = Superconnection(bundle, chart, {1: CoefficientForm(chart, bundle, bundle, 1, 0,
                                                                  {(0,): [[chart.symbols[1]]]})})
        path = os.path.join(self.temp_dir, 'curved.json')
        save_json(path, document('superconnection', conn.to_dict()))
        self.assertEqual(self.cli('rh', path, self.item('delta2.json')), EXIT_INVARIANT)
        self.assertEqual(self.cli('report', path, self.item('delta2.json')), EXIT_INVARIANT)

    def test_horn_fill(self):
        """Test the gallery horn fills and writes a simplex"""
        out = os.path.join(self.temp_dir, 'filled.json')
        self.assertEqual(self.cli('horn-fill', self.item('three_objects.json'), self.item('three_objects_horn.json'),
                                  '--out', out), EXIT_OK)
        with open(out, encoding='utf-8') as f:
            self.assertEqual(json.load(f)['kind'], 'nerve_simplex')

    def test_outer_horn(self):
        """Test an outer horn index exits with 2"""
        self.assertEqual(self.cli('horn-fill', self.item('three_objects.json'), self.item('three_objects_horn.json'),
                                  '--q', '0'), EXIT_INVARIANT)

    def test_spectral(self):
        """Test both pages on the promoted circle"""
        circle = self.item('promoted_circle.json')
        self.assertEqual(self.cli('spectral', circle, circle, '--page', '0'), EXIT_OK)
        self.assertEqual(self.cli('spectral', circle, circle), EXIT_OK)

    def test_report_csv(self):
        """Test the convergence table is written"""
        csv_path = os.path.join(self.temp_dir, 'tables', 'report.csv')
        code = self.cli('report', self.item('flat_rank2.json'), self.item('delta2.json'), '--csv', csv_path)
        self.assertIn(code, (EXIT_OK, EXIT_UNCONVERGED))
        with open(csv_path, encoding='utf-8') as f:
            self.assertEqual(f.readline().strip(), "N,max_mc_residual,observed_order")

    def test_missing_file(self):
        """Test a missing input exits with 1"""
        self.assertEqual(self.cli('check-mc', os.path.join(self.temp_dir, 'nope.json')), EXIT_PARSE)

    def test_wrong_kind(self):
        """Test a document of the wrong kind exits with 1"""
        self.assertEqual(self.cli('check-mc', self.item('delta2.json')), EXIT_PARSE)

    def test_malformed_json(self):
        """Test broken JSON exits with 1"""
        path = os.path.join(self.temp_dir, 'bad.json')
        with open(path, 'w', encoding='utf-8') as f:
            f.write('{"schema": "v1",')
        self.assertEqual(self.cli('check-mc', path), EXIT_PARSE)

    def test_unknown_schema(self):
        """Test a foreign schema tag exits with 1"""
        path = os.path.join(self.temp_dir, 'old.json')
        save_json(path, {'schema': 'v0', 'kind': 'local_system'})
        self.assertEqual(self.cli('check-mc', path), EXIT_PARSE)


if __name__ == '__main__':
    unittest.main()
