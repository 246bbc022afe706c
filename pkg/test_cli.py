"""
Tests for the raf command-line interface
"""

import logging

import pandas as pd
import pytest

from config.settings import settings
from conftest import random_dataset, small_config
from src.cli.commands import run_cli
from src.data.dataset_io import write_dataset
from src.models.raf_model import ModelConfig, model_parameter_count


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / 'synth'
    assert run_cli(['gen-synth', '--task', 'grid', '--n', '40', '--seed', '1', '--out', str(out)]) == 0
    return out


def stdout_lines(capsys):
    return capsys.readouterr().out.splitlines()


class TestParams:
    def test_full_scale_counts(self, capsys):
        code = run_cli(['params', '--nq', '2400', '--nv', '2048', '--nout', '2000',
                        '--tq', '310', '--tv', '310', '--trho', '510'])
        assert code == 0
        assert stdout_lines(capsys) == ['full=9830400000 tucker=51409880']

    @pytest.mark.parametrize('argv', [
        [],
        ['bogus'],
        ['params', '--nq', '0', '--nv', '2', '--nout', '2', '--tq', '2', '--tv', '2', '--trho', '2'],
        ['params', '--nq', '2'],
        ['train', '--data', 'x', '--out', 'y', '--variant', 'iox'],
        ['--log-level', 'verbose', 'params', '--nq', '2', '--nv', '2', '--nout', '2', '--tq', '2', '--tv', '2',
         '--trho', '2'],
    ])
    def test_usage_errors(self, argv):
        assert run_cli(argv) == 2


class TestLogLevel:
    PARAMS = ['params', '--nq', '2', '--nv', '2', '--nout', '2', '--tq', '2', '--tv', '2', '--trho', '2']

    def test_lower_case_accepted(self):
        assert run_cli(['--log-level', 'debug'] + self.PARAMS) == 0
        assert logging.getLogger().level == logging.DEBUG

    def test_unknown_configured_level_falls_back_to_info(self, monkeypatch, capsys):
        monkeypatch.setattr(settings, 'LOG_LEVEL', 'chatty')
        assert run_cli(self.PARAMS) == 0
        assert logging.getLogger().level == logging.INFO
        assert "Unknown log level 'CHATTY', using INFO" in capsys.readouterr().err


class TestScore:
    def test_three_questions(self, three_question_files, capsys):
        preds, humans = three_question_files
        assert run_cli(['score', '--pred', str(preds), '--human', str(humans)]) == 0
        assert stdout_lines(capsys) == ['accuracy=0.5556 count=3']

    def test_subset_average(self, three_question_files, capsys):
        preds, humans = three_question_files
        assert run_cli(['score', '--pred', str(preds), '--human', str(humans), '--subset-average']) == 0
        assert stdout_lines(capsys) == ['accuracy=0.5333 count=3']

    def test_missing_file(self, tmp_path, capsys):
        code = run_cli(['score', '--pred', str(tmp_path / 'none.tsv'), '--human', str(tmp_path / 'h.tsv')])
        assert code == 1
        assert capsys.readouterr().out == ''


class TestPipeline:
    def test_gen_synth_output(self, tmp_path, capsys):
        out = tmp_path / 'ds'
        assert run_cli(['gen-synth', '--task', 'joint', '--n', '7', '--out', str(out)]) == 0
        assert stdout_lines(capsys) == [f"wrote 7 examples to {out}"]
        assert (out / 'manifest.txt').exists()

    def test_train_then_eval(self, synth_dir, tmp_path, capsys):
        ckpt = tmp_path / 'model.ckpt'
        history = tmp_path / 'history.tsv'
        capsys.readouterr()
        code = run_cli(['train', '--data', str(synth_dir), '--out', str(ckpt), '--steps', '4',
                        '--batch', '8', '--lr', '1e-3', '--log-every', '2', '--history', str(history)])
        assert code == 0
        (line,) = stdout_lines(capsys)
        assert line.startswith('steps=4 final_loss=')
        assert line.endswith(f"checkpoint={ckpt}")

        table = pd.read_csv(history, sep='\t')
        assert list(table.columns) == ['step', 'mean_loss']
        assert table['step'].tolist() == [2, 4]

        preds = tmp_path / 'preds.tsv'
        attn = tmp_path / 'attn.tsv'
        code = run_cli(['eval', '--data', str(synth_dir), '--ckpt', str(ckpt),
                        '--preds', str(preds), '--dump-attention', str(attn)])
        assert code == 0
        (line,) = stdout_lines(capsys)
        assert line.startswith('accuracy=')
        assert line.endswith('count=40')
        assert len(preds.read_text().splitlines()) == 40
        assert len(attn.read_text().splitlines()) == 40 * (16 + 8) + 1

    def test_training_is_reproducible(self, synth_dir, tmp_path):
        paths = [tmp_path / 'a.ckpt', tmp_path / 'b.ckpt']
        for path in paths:
            assert run_cli(['train', '--data', str(synth_dir), '--out', str(path),
                            '--steps', '3', '--batch', '5', '--seed', '2']) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_single_branch_checkpoint_evaluates(self, synth_dir, tmp_path, capsys):
        ckpt = tmp_path / 'o.ckpt'
        assert run_cli(['train', '--data', str(synth_dir), '--out', str(ckpt), '--variant', 'o',
                        '--steps', '1', '--batch', '4']) == 0
        assert run_cli(['eval', '--data', str(synth_dir), '--ckpt', str(ckpt)]) == 0
        assert stdout_lines(capsys)[-1].endswith('count=40')

    def test_preset_mismatch(self, tmp_path, capsys):
        data_dir = tmp_path / 'small'
        write_dataset(random_dataset(small_config(), 4), data_dir)
        ckpt = tmp_path / 'model.ckpt'
        assert run_cli(['train', '--data', str(data_dir), '--out', str(ckpt), '--steps', '1']) == 1
        assert not ckpt.exists()
        assert capsys.readouterr().out == ''

    def test_warmup_phase_runs_before_main_data(self, tmp_path, capsys):
        data, warmup = tmp_path / 'joint', tmp_path / 'marginal'
        assert run_cli(['gen-synth', '--task', 'joint', '--n', '12', '--out', str(data),
                        '--marginal-out', str(warmup)]) == 0
        assert stdout_lines(capsys) == [f"wrote 12 examples to {data}",
                                        f"wrote 24 marginal-label examples to {warmup}"]

        history = tmp_path / 'history.tsv'
        code = run_cli(['train', '--data', str(data), '--out', str(tmp_path / 'm.ckpt'),
                        '--warmup-data', str(warmup), '--warmup-steps', '3', '--warmup-lr', '1e-2',
                        '--steps', '2', '--batch', '4', '--log-every', '1', '--history', str(history)])
        assert code == 0
        assert stdout_lines(capsys)[0].startswith('steps=5 ')
        assert pd.read_csv(history, sep='\t')['step'].tolist() == [1, 2, 3, 4, 5]

    def test_warmup_answer_count_must_match(self, synth_dir, tmp_path):
        warmup = tmp_path / 'k3'
        assert run_cli(['gen-synth', '--task', 'grid', '--n', '5', '--k', '3', '--out', str(warmup)]) == 0
        ckpt = tmp_path / 'm.ckpt'
        assert run_cli(['train', '--data', str(synth_dir), '--out', str(ckpt), '--warmup-data', str(warmup),
                        '--warmup-steps', '1', '--steps', '1']) == 1
        assert not ckpt.exists()

    def test_eval_rejects_corrupt_checkpoint(self, synth_dir, tmp_path):
        ckpt = tmp_path / 'broken.ckpt'
        ckpt.write_bytes(b'RAFC\x01')
        assert run_cli(['eval', '--data', str(synth_dir), '--ckpt', str(ckpt)]) == 1


class TestGradcheck:
    def test_image_variant_passes(self, capsys):
        assert run_cli(['gradcheck', '--seed', '0', '--variant', 'i']) == 0
        lines = stdout_lines(capsys)
        assert lines[-1].startswith('RAF-I\tPASS\tworst=')
        assert {line.split('\t')[1] for line in lines[:-1]} == {
            'image.T_q', 'image.T_v', 'image.T_c', 'image.T_out',
            'final.T_q', 'final.T_v', 'final.T_c', 'final.T_out',
        }

    def test_zero_tolerance_fails(self, capsys):
        assert run_cli(['gradcheck', '--variant', 'o', '--tol', '1e-30']) == 1
        assert stdout_lines(capsys)[-1].startswith('RAF-O\tFAIL')

    @pytest.mark.slow
    def test_all_variants(self, capsys):
        assert run_cli(['gradcheck', '--seed', '1', '--preset', 'desk']) == 0
        verdicts = [line for line in stdout_lines(capsys) if '\tPASS\t' in line]
        assert [line.split('\t')[0] for line in verdicts] == ['RAF-IO', 'RAF-I', 'RAF-O']


class TestAblate:
    def test_table(self, synth_dir, tmp_path, capsys):
        capsys.readouterr()
        out = tmp_path / 'ablation.tsv'
        code = run_cli(['ablate', '--data', str(synth_dir), '--heldout', str(synth_dir),
                        '--steps', '2', '--batch', '8', '--out', str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert printed == out.read_text()

        table = pd.read_csv(out, sep='\t')
        assert table['variant'].tolist() == ['RAF-I', 'RAF-O', 'RAF-IO']
        expected = [model_parameter_count(ModelConfig.from_preset('desk', variant=v))['total']
                    for v in ('I', 'O', 'IO')]
        assert table['parameters'].tolist() == expected
        assert table['accuracy'].between(0.0, 1.0).all()

    def test_missing_data(self, tmp_path):
        assert run_cli(['ablate', '--data', str(tmp_path / 'nope'), '--heldout', str(tmp_path / 'nope')]) == 1
