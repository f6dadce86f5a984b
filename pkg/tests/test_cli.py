"""
Tests for the command-line entry point.
"""

import json
import logging

import numpy as np
import pytest

import config as config_module
from core.recording import EventMarker, Recording
from core.storage import read_erpb, read_features, read_json, write_recording
from main import ErpBenchApp, build_parser, main


@pytest.fixture(autouse=True)
def fresh_app_state(monkeypatch):
    """Fresh config singleton, and no console handlers bound to a previous test's stdout."""
    monkeypatch.setattr(config_module, '_config_instance', None)
    yield
    for name in ('erpbench', 'core', 'patchlab', 'config', '__main__'):
        log = logging.getLogger(name)
        for handler in list(log.handlers):
            log.removeHandler(handler)
            handler.close()
        log.propagate = True


def run(tmp_path, *args):
    config_module._config_instance = None
    return main(['--log-dir', str(tmp_path / 'logs'), '--log-level', 'ERROR', *args])


def write_config(tmp_path, **settings):
    path = tmp_path / 'experiment.json'
    path.write_text(json.dumps(settings))
    return str(path)


class TestParser:

    def test_requires_command(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_ranks_sources_exclusive(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(['ranks', '--results', 'a.json', '--fixtures'])

    def test_fixture_flag_without_value(self):
        args = build_parser().parse_args(['ranks', '--fixtures'])
        assert args.fixtures == ''
        assert args.patch_fixture is None

    @pytest.mark.parametrize('argv', [
        ['--config', 'c.json', 'run', '--out', 'r.json'],
        ['run', '--config', 'c.json', '--out', 'r.json'],
    ])
    def test_config_before_or_after_command(self, argv):
        assert build_parser().parse_args(argv).config == 'c.json'

    def test_config_absent(self):
        args = build_parser().parse_args(['run', '--out', 'r.json'])
        assert getattr(args, 'config', None) is None

    @pytest.mark.parametrize('flag', ['--in', '--input'])
    def test_preprocess_flags_map_onto_config(self, flag):
        args = build_parser().parse_args([
            'preprocess', flag, 'raw', '--out', 'out', '--notch', '60', '--band', '1', '40',
            '--fs', '250', '--epoch', '-0.1', '0.6', '--baseline', '-0.1', '0',
            '--ptp-reject', '120', '--events', 'std', 'tgt',
        ])
        cfg = ErpBenchApp.preprocess_config(args)
        assert args.input == 'raw'
        assert cfg.notch_hz == 60.0
        assert cfg.band == (1.0, 40.0)
        assert cfg.target_fs == 250.0
        assert cfg.window == (-0.1, 0.6)
        assert cfg.baseline == (-0.1, 0.0)
        assert cfg.ptp_reject_uv == 120.0
        assert cfg.label_map == {'std': 0, 'tgt': 1}

    def test_flags_override_profile_and_spec(self, tmp_path):
        spec = tmp_path / 'pre.json'
        spec.write_text(json.dumps({'band': [0.1, 30.0], 'notch_hz': 50.0}))
        args = build_parser().parse_args([
            'preprocess', '--in', 'raw', '--out', 'out', '--spec', str(spec), '--dataset', 'AOPD',
            '--band', '0.5', '45', '--no-notch',
        ])
        cfg = ErpBenchApp.preprocess_config(args)
        assert cfg.band == (0.5, 45.0)
        assert cfg.notch_hz is None
        assert cfg.label_map == {'HC': 0, 'PD': 1}


class TestCommands:

    def test_ranks_from_shipped_tables(self, tmp_path, capsys):
        out = tmp_path / 'ranks.json'
        assert run(tmp_path, 'ranks', '--fixtures', '--patch-fixture', '--out', str(out)) == 0
        printed = capsys.readouterr().out
        assert 'EEGConformer' in printed
        assert 'Patch embedding wins' in printed
        assert out.exists()

    def test_synth_extract_train(self, tmp_path, capsys):
        spec = tmp_path / 'spec.json'
        spec.write_text(json.dumps({'n_subjects': 5, 'trials_per_subject': 10, 'n_channels': 2}))
        data = tmp_path / 'synthetic'
        assert run(tmp_path, 'synth', '--spec', str(spec), '--effect', 'evoked', '--seed', '3',
                   '--out', str(data)) == 0
        ts = read_erpb(str(data))
        assert ts.trials.shape == (50, 2, 200)
        capsys.readouterr()

        assert run(tmp_path, 'extract', '--in', str(data), '--set', 'erp91', '--print-layout') == 0
        layout = capsys.readouterr().out.strip().splitlines()
        assert len(layout) == 2 * 91

        model_path = tmp_path / 'linear.model'
        assert run(tmp_path, 'train', '--in', str(data), '--out', str(model_path)) == 0
        report = json.loads(capsys.readouterr().out)
        assert set(report['metrics']) == {'accuracy', 'f1_macro', 'auroc'}
        assert model_path.exists()

    def test_synth_profile(self, tmp_path):
        spec = tmp_path / 'spec.json'
        spec.write_text(json.dumps({'n_subjects': 5, 'trials_per_subject': 10}))
        data = tmp_path / 'adhd'
        assert run(tmp_path, 'synth', '--profile', 'ADHD-WMRI', '--spec', str(spec), '--out', str(data)) == 0
        ts = read_erpb(str(data))
        assert ts.n_channels == 21
        assert ts.n_samples == 170

    def test_run_and_ranks_from_results(self, tmp_path):
        data = tmp_path / 'toy'
        spec = tmp_path / 'spec.json'
        spec.write_text(json.dumps({'n_subjects': 5, 'trials_per_subject': 10, 'n_channels': 2,
                                    'dataset_name': 'toy'}))
        assert run(tmp_path, 'synth', '--spec', str(spec), '--out', str(data)) == 0

        config_path = write_config(tmp_path, datasets=[str(data)], seeds=[41, 42], show_progress=False,
                                   train={'max_epochs': 3, 'patience': 2})
        results = tmp_path / 'results.json'
        assert run(tmp_path, 'run', '--config', config_path, '--out', str(results)) == 0
        document = read_json(str(results))
        assert len(document['runs']) == 2 * 2
        assert set(document['aggregate']['toy']) == {'EEG Features', 'ERP Features'}

        code = run(tmp_path, 'ranks', '--results', str(results), '--out', str(tmp_path / 'r.json'))
        assert code == 0
        table = read_json(str(tmp_path / 'r.json'))
        assert table

    def test_run_without_datasets(self, tmp_path):
        assert run(tmp_path, 'run', '--out', str(tmp_path / 'results.json')) == 1

    def test_gradcheck(self, tmp_path, capsys):
        assert run(tmp_path, 'gradcheck', '--strategy', 'multi', '--samples', '50', '--channels', '3',
                   '--entries', '3', '--tolerance', '1e-3') == 0
        assert 'passed' in capsys.readouterr().out

    def test_errors_return_one(self, tmp_path, capsys):
        assert run(tmp_path, 'extract', '--in', str(tmp_path / 'missing'), '--out', 'x.feat') == 1
        assert 'Error' in capsys.readouterr().err

    def test_patchbench(self, tmp_path):
        data = tmp_path / 'bench'
        spec = tmp_path / 'spec.json'
        spec.write_text(json.dumps({'n_subjects': 5, 'trials_per_subject': 10, 'n_channels': 2,
                                    'window': [-0.1, 0.15], 'baseline': [-0.1, 0.0]}))
        assert run(tmp_path, 'synth', '--spec', str(spec), '--out', str(data)) == 0
        out = tmp_path / 'patch.json'
        assert run(tmp_path, 'patchbench', '--in', str(data), '--out', str(out), '--strategies', 'multi',
                   '--seeds', '41', '--epochs', '1') == 0
        document = read_json(str(out))
        assert [row['strategy'] for row in document['strategies']] == ['multi']
        assert np.isfinite(document['strategies'][0]['f1_mean'])

    def test_preprocess_with_filter_and_epoch_flags(self, tmp_path, raw_recording, capsys):
        for i in range(2):
            write_recording(raw_recording.with_data(raw_recording.data, subject_id=f'sub-{i}'),
                            str(tmp_path / 'raw' / f'sub-{i}'))
        flags = ['--notch', '50', '--band', '0.5', '45', '--fs', '200', '--epoch', '-0.2', '0.8',
                 '--baseline', '-0.2', '0', '--ptp-reject', '100']

        out = tmp_path / 'all-events'
        assert run(tmp_path, 'preprocess', '--in', str(tmp_path / 'raw'), '--out', str(out), *flags) == 0
        ts = read_erpb(str(out))
        assert ts.class_names == ['button', 'std', 'tgt']
        assert ts.trials.shape == (2 * 23, 4, 200)
        assert ts.fs == 200.0

        out = tmp_path / 'oddball'
        assert run(tmp_path, 'preprocess', '--in', str(tmp_path / 'raw'), '--out', str(out), *flags,
                   '--events', 'std', 'tgt') == 0
        ts = read_erpb(str(out))
        assert ts.n_trials == 2 * 22
        np.testing.assert_array_equal(np.bincount(ts.labels), [22, 22])
        capsys.readouterr()

    def test_extract_features_then_train_on_saved_split(self, tmp_path, capsys):
        spec = tmp_path / 'spec.json'
        spec.write_text(json.dumps({'n_subjects': 6, 'trials_per_subject': 12, 'n_channels': 2,
                                    'effect': 'alpha'}))
        data = tmp_path / 'alpha'
        assert run(tmp_path, 'synth', '--spec', str(spec), '--seed', '2', '--out', str(data)) == 0

        features = tmp_path / 'alpha.feat'
        assert run(tmp_path, 'extract', '--in', str(data), '--out', str(features), '--set', 'eeg') == 0
        assert read_features(str(features)).values.shape == (72, 2 * 31)

        config_path = write_config(tmp_path, train={'max_epochs': 5, 'patience': 3, 'lr': 1e-2})
        split = tmp_path / 'split.json'
        model = tmp_path / 'linear.model'
        capsys.readouterr()
        assert run(tmp_path, 'train', '--features', str(features), '--seed', '43', '--save-split', str(split),
                   '--config', config_path) == 0
        first = json.loads(capsys.readouterr().out)

        assert run(tmp_path, 'train', '--features', str(features), '--split', str(split),
                   '--config', config_path, '--out', str(model)) == 0
        second = json.loads(capsys.readouterr().out)
        assert second['split'] == first['split'] == read_json(str(split))
        assert model.exists()

        assert run(tmp_path, 'evaluate', '--model', str(model), '--features', str(features),
                   '--split', str(split)) == 0
        scored = json.loads(capsys.readouterr().out)
        assert scored['metrics'] == pytest.approx(second['metrics'], abs=1e-6)
        assert scored['rows'] == 12 * len(first['split']['test_subjects'])

    def test_train_needs_features(self, tmp_path, capsys):
        assert run(tmp_path, 'train', '--split', 'split.json') == 1
        assert '--features' in capsys.readouterr().err

    def test_layout_without_dataset(self, tmp_path, capsys):
        assert run(tmp_path, 'extract', '--print-layout', '--set', 'erp') == 0
        rows = capsys.readouterr().out.strip().splitlines()
        assert len(rows) == 91
        assert rows[0].split('\t')[:2] == ['0', 'ch']

    def test_ranks_by_shipped_file_name(self, tmp_path, capsys, monkeypatch):
        monkeypatch.chdir(tmp_path)
        out = tmp_path / 'ranks.json'
        assert run(tmp_path, 'ranks', '--fixtures', 'paper_tables.json', '--out', str(out)) == 0
        printed = capsys.readouterr().out
        assert printed.splitlines()[2].split()[1] == 'EEGConformer'
        assert read_json(str(out))['avg_rank']['EEGConformer'] == pytest.approx(3.96, abs=0.01)

    def test_ranks_filtered_with_top_methods(self, tmp_path, capsys):
        out = tmp_path / 'ranks.json'
        assert run(tmp_path, 'ranks', '--fixtures', '--task', 'disease', '--metric', 'F1', '--top', '3',
                   '--out', str(out)) == 0
        printed = capsys.readouterr().out
        assert 'Average rank over 6 evaluations' in printed
        assert 'Top 3 per evaluation' in printed
        assert len(read_json(str(out))['cells']) == 6
        assert all(cell['metric'] == 'F1' for cell in read_json(str(out))['cells'])
