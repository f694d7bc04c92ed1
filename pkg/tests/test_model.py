"""
Tests for counting models, generators, reversal and the rank-one structure.
"""

import json

import numpy as np
import pytest

from current_counting.catalog import (
    random_model,
    random_reversible_model,
    random_walk,
    three_state,
    zero_current_chain,
)
from current_counting.core.exceptions import ErgodicityError, ModelError
from current_counting.core.model import (
    MarkovCountingModel,
    classify_reversibility,
    deformed_generator,
    generator,
    modified_generator,
    modified_reverse_generator,
    rank_one_identity_check,
    reverse_deformed_generator,
    reverse_model,
    stationary_state,
    validate,
)


class TestModelSchema:
    """Model validation and JSON loading."""

    def test_negative_rate(self):
        with pytest.raises(ModelError, match="negative rate"):
            MarkovCountingModel.from_dict({
                'omega': 3, 'rates': [[0, 1, -1], [1, 0, 1], [1, 1, 0]], 's_in': [2], 's_out': [2],
            })

    def test_state_out_of_range(self):
        with pytest.raises(ModelError, match="outside"):
            MarkovCountingModel.from_dict({
                'omega': 3, 'rates': [[0, 1, 1], [1, 0, 1], [1, 1, 0]], 's_in': [4], 's_out': [2],
            })

    def test_counted_set_must_be_proper(self):
        with pytest.raises(ModelError, match="proper subset"):
            MarkovCountingModel.from_dict({
                'omega': 3, 'rates': [[0, 1, 1], [1, 0, 1], [1, 1, 0]], 's_in': [2, 3], 's_out': [2],
            })

    def test_too_few_states(self):
        with pytest.raises(ModelError):
            MarkovCountingModel.from_dict({'omega': 2, 'rates': [[0, 1], [1, 0]], 's_in': [2], 's_out': [2]})

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{\"omega\": 3,")
        with pytest.raises(ModelError, match="Invalid JSON"):
            MarkovCountingModel.from_json(path)

    def test_round_trip(self, tmp_path, walk_model):
        path = tmp_path / "rw.json"
        path.write_text(json.dumps(walk_model.to_dict()))
        assert MarkovCountingModel.from_json(path) == walk_model

    def test_bundled_models_load(self, models_dir):
        for path in sorted(models_dir.glob("*.json")):
            model = MarkovCountingModel.from_json(path)
            assert model.omega >= 3


class TestGenerators:
    """M, M(g) and the stationary state."""

    def test_columns_sum_to_zero(self, dense_model):
        m = generator(dense_model)
        assert m.is_markov(1e-14 * dense_model.max_rate)

    def test_deformation_at_one(self, dense_model):
        np.testing.assert_array_equal(deformed_generator(dense_model, 1.0).entries, generator(dense_model).entries)

    def test_deformation_weights(self, three_state_model):
        m = deformed_generator(three_state_model, 2.0).entries
        assert m[1, 0] == pytest.approx(2.0)
        assert m[0, 1] == pytest.approx(0.5)
        assert m[2, 0] == pytest.approx(0.25)

    def test_zero_deformation_rejected(self, dense_model):
        with pytest.raises(ValueError):
            deformed_generator(dense_model, 0.0)

    def test_three_state_stationary(self, three_state_model):
        np.testing.assert_allclose(stationary_state(three_state_model).probs, [0.4, 0.4, 0.2], atol=1e-12)

    def test_homogeneous_ring_uniform(self):
        np.testing.assert_allclose(stationary_state(random_walk(5, 0.0)).probs, np.full(5, 0.2), atol=1e-12)

    def test_stationary_residual(self, rng):
        model = random_model(5, rng)
        probs = stationary_state(model).probs
        m = generator(model).entries.real
        assert np.abs(m @ probs).max() <= 1e-12 * np.abs(m).max()
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_reducible_chain(self):
        rates = ((0.0, 1.0, 0.0), (1.0, 0.0, 0.0), (0.0, 0.0, 0.0))
        model = MarkovCountingModel(omega=3, rates=rates, s_in=(2,), s_out=(2,))
        with pytest.raises(ErgodicityError):
            stationary_state(model)


class TestReversal:
    """Time reversal and the reversibility classes."""

    def test_reversible_fixed_point(self, rng):
        model = random_reversible_model(4, rng)
        np.testing.assert_allclose(reverse_model(model).rate_matrix, model.rate_matrix, atol=1e-12)

    def test_reverse_keeps_stationary_state(self, walk_model):
        np.testing.assert_allclose(stationary_state(reverse_model(walk_model)).probs,
                                   stationary_state(walk_model).probs, atol=1e-10)

    def test_reverse_spectrum(self, rng):
        model = random_model(4, rng)
        forward = np.sort_complex(np.linalg.eigvals(generator(model).entries))
        backward = np.sort_complex(np.linalg.eigvals(generator(reverse_model(model)).entries))
        np.testing.assert_allclose(forward, backward, atol=1e-10)

    def test_counting_reversible_symmetry(self, three_state_model, rng):
        for _ in range(5):
            g = complex(*rng.uniform(0.3, 2.0, 2))
            np.testing.assert_allclose(reverse_deformed_generator(three_state_model, g).entries,
                                       deformed_generator(three_state_model, 1.0 / g).entries, atol=1e-12)

    def test_classification(self, three_state_model, walk_model):
        assert classify_reversibility(three_state_model) == (True, True)
        assert classify_reversibility(walk_model) == (False, False)

    def test_different_counted_sets(self, rng):
        model = random_reversible_model(4, rng).model_copy(update={'s_out': (2, 3)})
        chain, counting = classify_reversibility(model)
        assert chain and not counting

    def test_zero_current_chain(self):
        model = zero_current_chain()
        assert classify_reversibility(model) == (True, False)
        np.testing.assert_allclose(stationary_state(model).probs, [0.25, 0.5, 0.25], atol=1e-12)


class TestRankOne:
    """M(g) = M_x - w_out |U(g)><V(g)|."""

    def test_modified_generator_is_markov(self, dense_model):
        assert np.abs(modified_generator(dense_model).column_sums()).max() <= 1e-13 * dense_model.max_rate

    def test_removed_transitions(self, three_state_model):
        m_x = modified_generator(three_state_model).entries.real
        m = generator(three_state_model).entries.real
        assert m_x[1, 0] == pytest.approx(0.0, abs=1e-14)
        assert m_x[0, 1] == pytest.approx(0.0, abs=1e-14)
        assert m_x[0, 0] == pytest.approx(m[0, 0] + 1.0)
        assert m_x[2, 0] == pytest.approx(m[2, 0])

    def test_modified_reverse_spectrum(self, dense_model):
        m_r = modified_reverse_generator(dense_model)
        assert np.abs(m_r.column_sums()).max() <= 1e-12 * dense_model.max_rate
        assert np.min(np.abs(np.linalg.eigvals(m_r.entries))) <= 1e-12 * dense_model.max_rate

    def test_identity_at_one(self, dense_model):
        assert rank_one_identity_check(dense_model, 1.0) == pytest.approx(0.0, abs=1e-14)

    def test_identity_complex_g(self, dense_model):
        scale = dense_model.max_rate
        assert rank_one_identity_check(dense_model, 0.7 + 0.2j) <= 1e-12 * scale
        assert rank_one_identity_check(dense_model, 0.7 + 0.2j, reverse=True) <= 1e-12 * scale


class TestValidation:
    """Assumption checks."""

    def test_three_state_passes(self, three_state_model):
        assert validate(three_state_model).passed

    def test_missing_counted_rate(self):
        rates = ((0.0, 1.0, 1.0), (0.0, 0.0, 1.0), (1.0, 1.0, 0.0))
        report = validate(MarkovCountingModel(omega=3, rates=rates, s_in=(2,), s_out=(2,)))
        assert 'A0' in report.failures

    def test_sector_boundary_fails_a2(self):
        report = validate(three_state(1.0, 0.5))
        assert 'A2' in report.failures

    def test_sector_boundary_doubles_generator_eigenvalue(self):
        # at p = 1 states 1 and 2 are interchangeable: -2 - q is a double eigenvalue of M
        model = three_state(1.0, 0.5)
        eigenvalues = np.sort(np.linalg.eigvals(generator(model).entries).real)
        np.testing.assert_allclose(eigenvalues, [-2.5, -2.5, 0.0], atol=1e-10)
        assert validate(model).failures == ['A1', 'A2']
