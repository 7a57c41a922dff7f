import math

import pytest

from cotlab.lab import CACHE_ENV, LabConfig, canonical_key, coerce, read_config_file
from cotlab.utils import DomainError


class TestCoercion:

    def test_keys(self):
        assert canonical_key('--n-terms') == 'n_terms'
        assert canonical_key('N') == 'n_terms'
        assert canonical_key('cache-dir') == 'cache_dir'
        with pytest.raises(DomainError):
            canonical_key('--colour')

    def test_values(self):
        assert coerce('samples', '1e6') == 10 ** 6
        assert coerce('tolerance', 'inf') == math.inf
        assert coerce('fejer', 'yes') is True
        assert coerce('format', ' json ') == 'json'
        assert coerce('seed', 5) == 5
        with pytest.raises(DomainError):
            coerce('samples', '1.5')
        with pytest.raises(DomainError):
            coerce('fejer', 'maybe')


class TestConfigFile:

    def test_read(self, tmp_path):
        path = tmp_path / 'recipe.cfg'
        path.write_text('# equidistribution run\nb = 1009\n\nN=4096  # direct cap\nmethod = direct\n')
        assert read_config_file(path) == {'b': 1009, 'n_terms': 4096, 'method': 'direct'}

    def test_malformed(self, tmp_path):
        path = tmp_path / 'recipe.cfg'
        path.write_text('b 1009\n')
        with pytest.raises(DomainError, match='recipe.cfg:1'):
            read_config_file(path)

    def test_missing(self, tmp_path):
        with pytest.raises(DomainError):
            read_config_file(tmp_path / 'absent.cfg')


class TestLabConfig:

    def test_defaults(self):
        cfg = LabConfig()
        assert cfg.seed == 42
        assert cfg.normalization == 'two-pi'
        assert cfg.normalization_divisor == 2 * math.pi
        assert cfg.threshold_grid == [0.5 * i for i in range(17)]
        assert cfg.to_dict()['method'] == 'cross-checked'

    @pytest.mark.parametrize('settings', [dict(delta=0.125), dict(seed=-1), dict(seed=2 ** 63), dict(a0=0.7, a1=0.6),
                                          dict(method='guess'), dict(format='xml'), dict(normalization='e'),
                                          dict(workers=0), dict(precision=32)])
    def test_invalid(self, settings):
        with pytest.raises(DomainError):
            LabConfig(**settings)

    def test_precedence(self, tmp_path):
        path = tmp_path / 'recipe.cfg'
        path.write_text('cache_dir = from-file\nseed = 3\nsamples = 20000\n')
        env = {CACHE_ENV: 'from-env'}
        assert LabConfig.from_sources(environ=env).cache_dir == 'from-env'
        cfg = LabConfig.from_sources(flags={'seed': 9}, config_file=path, environ=env)
        assert cfg.cache_dir == 'from-file'
        assert cfg.seed == 9
        assert cfg.samples == 20000
        assert LabConfig.from_sources(flags={'--cache-dir': 'from-flag'}, config_file=path,
                                      environ=env).cache_dir == 'from-flag'

    def test_thresholds(self):
        assert LabConfig(thresholds='0, 1.5,3').threshold_grid == [0.0, 1.5, 3.0]
        with pytest.raises(DomainError):
            LabConfig(thresholds='0,a').threshold_grid

    def test_window(self):
        with pytest.raises(DomainError):
            LabConfig().window()
        w = LabConfig(b=101, a0=0.6, a1=0.9).window()
        assert (w.b, w.a0, w.a1) == (101, 0.6, 0.9)

    def test_evaluator(self, tmp_path):
        direct = LabConfig(method='direct', n_terms=64).evaluator()
        assert direct.table is None and direct.n_terms == 64
        fourier = LabConfig(method='fourier', m_terms=64, cache_dir=str(tmp_path)).evaluator()
        assert fourier.table.limit == 128
        assert (tmp_path / 'tau_128.bin').exists()
