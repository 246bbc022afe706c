"""
Tests for answer vocabularies, the dataset directory format and synthetic tasks
"""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from conftest import random_dataset, small_config
from src.data.answers import AnswerVocab, build_answer_vocab, class_vocab, normalize_answer
from src.data.dataset_io import Dataset, read_dataset, read_manifest, write_dataset
from src.data.synthetic import (
    SynthSpec,
    generate_synthetic,
    location_code_width,
    location_codes,
    marginal_dataset,
    planted_targets,
)
from src.errors import DatasetFormatError, ShapeMismatchError


class TestNormalizeAnswer:
    @pytest.mark.parametrize('raw, expected', [
        ('Yes.', 'yes'),
        ('  Two   dogs ', 'two dogs'),
        ("it's", 'its'),
        ('RED!', 'red'),
        ('...', ''),
        ('tab\tseparated', 'tab separated'),
    ])
    def test_examples(self, raw, expected):
        assert normalize_answer(raw) == expected

    def test_idempotent(self):
        for raw in ('A, b; C', 'hello  World?', 'x-ray'):
            once = normalize_answer(raw)
            assert normalize_answer(once) == once


class TestAnswerVocab:
    def test_frequency_then_alphabetical(self):
        vocab = build_answer_vocab(['yes', 'no', 'Yes', 'two', 'no', 'yes.', 'blue', 'two'], k=3)
        assert vocab.answers == ['yes', 'no', 'two']
        assert vocab.counts == [3, 2, 2]

    def test_lookup(self):
        vocab = build_answer_vocab(['cat', 'dog', 'dog'], k=2)
        assert vocab.index_of('Dog!') == 0
        assert vocab.answer_at(1) == 'cat'

    def test_fewer_answers_than_requested(self, caplog):
        with caplog.at_level(logging.WARNING):
            vocab = build_answer_vocab(['a', 'b', 'a'], k=5)
        assert len(vocab) == 2
        assert 'Only 2 distinct answers' in caplog.text

    def test_empty_answers_skipped(self):
        assert build_answer_vocab(['?', 'ok'], k=2).answers == ['ok']

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            AnswerVocab(['a', 'b', 'a'])

    def test_invalid_size(self):
        with pytest.raises(ValueError):
            build_answer_vocab(['a'], k=0)

    def test_class_vocab(self):
        assert class_vocab(3).answers == ['0', '1', '2']


class TestDatasetContainer:
    def test_example_access(self, config, dataset):
        example = dataset[3]
        assert example.qid == 'q003'
        assert example.v_I.shape == (config.grid, config.n_v)
        assert example.v_O.shape == (config.objects, config.n_v)
        assert [e.qid for e in dataset][:2] == ['q000', 'q001']

    def test_dims(self, config, dataset):
        assert (dataset.n_q, dataset.n_v, dataset.grid, dataset.objects) == (6, 5, 4, 3)

    def test_subset(self, dataset):
        part = dataset.subset([5, 1])
        assert part.qids == ['q005', 'q001']
        assert_array_equal(part.q[0], dataset.q[5])

    def test_validation(self, config, dataset):
        with pytest.raises(ShapeMismatchError):
            Dataset(dataset.qids[:-1], dataset.q, dataset.v_I, dataset.v_O, dataset.labels, dataset.vocab)
        with pytest.raises(ValueError):
            Dataset(['a'] * len(dataset), dataset.q, dataset.v_I, dataset.v_O, dataset.labels, dataset.vocab)
        bad = dataset.labels.copy()
        bad[0] = config.n_answers
        with pytest.raises(ValueError):
            Dataset(dataset.qids, dataset.q, dataset.v_I, dataset.v_O, bad, dataset.vocab)


class TestDatasetFiles:
    def test_round_trip_rounds_to_float32(self, config, tmp_path):
        data = random_dataset(config, 10, seed=4)
        write_dataset(data, tmp_path / 'ds')
        loaded = read_dataset(tmp_path / 'ds')

        assert loaded.qids == data.qids
        assert_array_equal(loaded.labels, data.labels)
        assert loaded.vocab == data.vocab
        assert_array_equal(loaded.q, data.q.astype(np.float32).astype(np.float64))
        assert_array_equal(loaded.v_I, data.v_I.astype(np.float32).astype(np.float64))
        assert_array_equal(loaded.v_O, data.v_O.astype(np.float32).astype(np.float64))
        assert_allclose(loaded.v_O, data.v_O, rtol=1e-6, atol=0)

    def test_layout(self, config, tmp_path):
        data = random_dataset(config, 2)
        write_dataset(data, tmp_path)
        record = config.n_q + (config.grid + config.objects) * config.n_v
        assert (tmp_path / 'features.bin').stat().st_size == 2 * record * 4
        assert (tmp_path / 'labels.tsv').read_text() == f"q000\t{data.labels[0]}\nq001\t{data.labels[1]}\n"
        assert (tmp_path / 'vocab.txt').read_text() == '0\n1\n2\n'
        manifest = read_manifest(tmp_path)
        assert manifest['count'] == '2'
        assert manifest['grid'] == '4'
        assert not list(tmp_path.glob('*.tmp'))

    def test_count_disagreement(self, config, tmp_path):
        write_dataset(random_dataset(config, 4), tmp_path)
        manifest = tmp_path / 'manifest.txt'
        manifest.write_text(manifest.read_text().replace('count=4', 'count=5'))
        with pytest.raises(DatasetFormatError, match='count=5 but features.bin holds 4 records'):
            read_dataset(tmp_path)

    def test_empty_dataset(self, config, tmp_path):
        write_dataset(random_dataset(config, 0), tmp_path)
        loaded = read_dataset(tmp_path)
        assert len(loaded) == 0
        assert loaded.grid == config.grid

    def test_written_from_example_list(self, config, tmp_path):
        source = random_dataset(config, 5, seed=8)
        data = Dataset.from_examples(list(source), source.vocab, config.n_q, config.n_v,
                                     config.grid, config.objects)
        assert data.qids == source.qids
        assert_array_equal(data.v_O, source.v_O)
        write_dataset(data, tmp_path)
        assert_array_equal(read_dataset(tmp_path).labels, source.labels)

    def test_empty_example_list(self, config, tmp_path):
        data = Dataset.from_examples([], class_vocab(3), config.n_q, config.n_v, config.grid, config.objects)
        assert (data.n_q, data.n_v, data.grid, data.objects) == (6, 5, 4, 3)
        write_dataset(data, tmp_path)
        assert (tmp_path / 'features.bin').stat().st_size == 0
        assert read_manifest(tmp_path)['count'] == '0'
        assert len(read_dataset(tmp_path)) == 0

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DatasetFormatError, match='manifest'):
            read_dataset(tmp_path)

    def test_bad_label_rows(self, config, tmp_path):
        write_dataset(random_dataset(config, 2), tmp_path)
        (tmp_path / 'labels.tsv').write_text('q000\t1\nq001\tx\n')
        with pytest.raises(DatasetFormatError):
            read_dataset(tmp_path)


def decode_binary(codes: np.ndarray) -> np.ndarray:
    bits = (codes > 0).astype(np.int64)
    return (bits << np.arange(codes.shape[1])).sum(axis=1)


class TestLocationCodes:
    def test_widths(self):
        assert location_code_width(1) == 1
        assert location_code_width(2) == 1
        assert location_code_width(16) == 4
        assert location_code_width(17) == 5

    def test_binary_codes_least_significant_first(self):
        codes = location_codes(4)
        assert_array_equal(codes, [[-1, -1], [1, -1], [-1, 1], [1, 1]])
        assert_array_equal(decode_binary(location_codes(13)), np.arange(13))

    def test_onehot(self):
        assert_array_equal(location_codes(3, 'onehot'), np.eye(3))


class TestSyntheticTasks:
    def test_byte_identical_regeneration(self, tmp_path):
        spec = SynthSpec.from_preset('desk', 'joint', 30, seed=5)
        write_dataset(generate_synthetic(spec)[0], tmp_path / 'a')
        write_dataset(generate_synthetic(spec)[0], tmp_path / 'b')
        for name in ('features.bin', 'labels.tsv', 'vocab.txt', 'manifest.txt'):
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()

    def test_noise_free_grid_readout(self):
        spec = SynthSpec.from_preset('desk', 'grid', 200, noise=0.0, seed=1)
        data, vocab = generate_synthetic(spec)
        targets = planted_targets(spec)
        k = spec.answers
        rows = np.arange(len(data))
        cells = targets['grid_target'].to_numpy()

        assert vocab.answers == ['0', '1', '2', '3']
        assert_array_equal(np.argmax(data.v_I[rows, cells, :k], axis=1), data.labels)
        assert_array_equal(targets['grid_class'].to_numpy(), data.labels)
        assert_array_equal(decode_binary(data.q[:, :4]), cells)
        assert_array_equal(decode_binary(data.q[:, 4:7]), targets['object_target'].to_numpy())

    def test_bias_channels(self):
        spec = SynthSpec.from_preset('desk', 'object', 20, noise=0.0)
        data, _ = generate_synthetic(spec)
        assert_array_equal(data.q[:, 7], np.ones(20))
        assert not data.q[:, 8:].any()
        assert_array_equal(data.v_I[:, :, 4 + 4], np.ones((20, 16)))
        assert_array_equal(data.v_O[:, :, 4 + 3], np.ones((20, 8)))

    def test_noise_free_object_readout(self):
        spec = SynthSpec.from_preset('desk', 'object', 100, noise=0.0, seed=2)
        data, _ = generate_synthetic(spec)
        objects = planted_targets(spec)['object_target'].to_numpy()
        assert_array_equal(np.argmax(data.v_O[np.arange(100), objects, :4], axis=1), data.labels)

    def test_joint_task_needs_both_modalities(self):
        spec = SynthSpec.from_preset('desk', 'joint', 10000, seed=3)
        data, _ = generate_synthetic(spec)
        targets = planted_targets(spec)
        k = spec.answers
        expected = (targets['grid_class'] + targets['object_class']).to_numpy() % k
        assert_array_equal(data.labels, expected)
        assert abs(np.mean(targets['grid_class'].to_numpy() == data.labels) - 1 / k) < 0.02
        assert abs(np.mean(targets['object_class'].to_numpy() == data.labels) - 1 / k) < 0.02

    def test_labels_balanced(self):
        data, _ = generate_synthetic(SynthSpec.from_preset('desk', 'joint', 20000, seed=7))
        freq = np.bincount(data.labels, minlength=4) / 20000
        assert np.all(np.abs(freq - 0.25) < 0.0125)

    def test_qids_fixed_width(self):
        data, _ = generate_synthetic(SynthSpec.from_preset('desk', 'grid', 3))
        assert data.qids == ['000000', '000001', '000002']

    def test_onehot_location_codes(self):
        spec = SynthSpec.from_preset('desk', 'grid', 10, noise=0.0, n_q=25, n_v=21,
                                     location_code='onehot')
        data, _ = generate_synthetic(spec)
        cells = planted_targets(spec)['grid_target'].to_numpy()
        assert_array_equal(np.argmax(data.q[:, :16], axis=1), cells)
        assert_array_equal(data.q[:, 24], np.ones(10))
        assert_array_equal(data.v_I[0, :, 4:20], np.eye(16))

    def test_dimension_constraints(self):
        with pytest.raises(ValueError, match='n_q'):
            SynthSpec.from_preset('desk', 'grid', 10, n_q=7)
        with pytest.raises(ValueError, match='n_v'):
            SynthSpec.from_preset('desk', 'grid', 10, n_v=8)
        with pytest.raises(ValueError):
            SynthSpec.from_preset('desk', 'colour', 10)
        with pytest.raises(ValueError):
            SynthSpec.from_preset('desk', 'grid', 10, noise=-1.0)

    def test_marginal_dataset_repeats_features_with_branch_labels(self):
        spec = SynthSpec.from_preset('desk', 'joint', 50, seed=4)
        joint, _ = generate_synthetic(spec)
        targets = planted_targets(spec)
        marginal = marginal_dataset(spec)

        assert len(marginal) == 100
        assert marginal.qids[:2] == ['000000g', '000001g']
        assert marginal.qids[50:52] == ['000000o', '000001o']
        assert marginal.vocab == joint.vocab
        assert_array_equal(marginal.v_I[:50], joint.v_I)
        assert_array_equal(marginal.v_O[50:], joint.v_O)
        assert_array_equal(marginal.q[50:], joint.q)
        assert_array_equal(marginal.labels[:50], targets['grid_class'].to_numpy())
        assert_array_equal(marginal.labels[50:], targets['object_class'].to_numpy())

    def test_fits_desk_model(self):
        data, _ = generate_synthetic(SynthSpec.from_preset('desk', 'grid', 5))
        cfg = small_config(n_q=12, n_v=16, grid=16, objects=8, n_answers=4)
        assert (data.n_q, data.n_v, data.grid, data.objects) == (cfg.n_q, cfg.n_v, cfg.grid, cfg.objects)
