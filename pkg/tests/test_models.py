import json

import numpy as np
import pytest

from aoiq.models import (
    ModelKind,
    QueueNetworkSpec,
    Server,
    build_model,
    build_network_model,
    closed_form_pi,
    comparison_specs,
    kind_of,
    mm11_exact_aoi,
)
from aoiq.shs import RESET_ZERO as Z
from aoiq.shs import average_aoi, stationary_distribution

RATES = dict(lambda1=1.1, lambda_rest=2.3, mu=3.7, theta=5.3)


def _find(model, src_label, dst_label, rate):
    """The unique transition src->dst with the given rate."""
    labels = model.state_labels
    hits = [
        t
        for t in model.transitions
        if labels[t.src] == src_label
        and labels[t.dst] == dst_label
        and t.rate == pytest.approx(rate)
    ]
    assert len(hits) == 1, f"{src_label}->{dst_label} @ {rate}: {len(hits)} matches"
    return hits[0]


def test_shapes_and_counts():
    cases = [
        (ModelKind.SINGLE_NO_BUFFER, QueueNetworkSpec.single_queue(1.1, 2.3, 3.7, 5.3, 0), 2, 6, 2),
        (ModelKind.TWO_PARALLEL_NO_BUFFER, QueueNetworkSpec.symmetric_parallel(2, 1.1, 2.3, 3.7, 5.3, 0), 4, 24, 3),
        (ModelKind.SINGLE_BUFFER2, QueueNetworkSpec.single_queue(1.1, 2.3, 3.7, 5.3, 2), 4, 14, 4),
        (ModelKind.TWO_PARALLEL_BUFFER1, QueueNetworkSpec.symmetric_parallel(2, 1.1, 2.3, 3.7, 5.3, 1), 9, 60, 5),
    ]
    for kind, spec, n_states, n_trans, age_dim in cases:
        model = build_model(kind, spec)
        assert model.num_states == n_states
        assert len(model.transitions) == n_trans
        assert model.age_dim == age_dim


def test_single_no_buffer_full_transition_table():
    spec = QueueNetworkSpec.single_queue(1.1, 2.3, 3.7, 5.3, buffer=0)
    model = build_model(ModelKind.SINGLE_NO_BUFFER, spec)
    expected = [
        ((0,), (1,), 1.1, (0, Z)),  # fresh update enters service
        ((0,), (1,), 2.3, (0, 0)),  # background update carries monitor age
        ((1,), (0,), 3.7, (1, Z)),  # delivery refreshes the monitor
        ((1,), (0,), 5.3, (0, Z)),  # loss discards silently
        ((1,), (1,), 1.1, (0, Z)),  # fresh update preempts
        ((1,), (1,), 2.3, (0, 0)),  # background update preempts
    ]
    for src, dst, rate, reset in expected:
        assert _find(model, src, dst, rate).reset.source == reset


def test_single_buffer2_key_rows():
    spec = QueueNetworkSpec.single_queue(1.1, 2.3, 3.7, 5.3, buffer=2)
    model = build_model(ModelKind.SINGLE_BUFFER2, spec)
    # Loss with a waiting update: it moves into service, monitor unchanged.
    assert _find(model, (2,), (1,), 5.3).reset.source == (0, 2, Z, Z)
    # Delivery from a full queue: monitor takes the served age, queue shifts.
    assert _find(model, (3,), (2,), 3.7).reset.source == (1, 2, 3, Z)
    # Background arrival appends behind its predecessor.
    assert _find(model, (1,), (2,), 2.3).reset.source == (0, 1, 1, Z)
    # Full queue: the last waiting update is replaced.
    assert _find(model, (3,), (3,), 1.1).reset.source == (0, 1, 2, Z)
    assert _find(model, (3,), (3,), 2.3).reset.source == (0, 1, 2, 2)


def _asymmetric_pair(buffer):
    return QueueNetworkSpec(
        sources=(1.1, 2.3),
        servers=(Server(3.7, 5.3, buffer), Server(4.3, 6.1, buffer)),
        routing=((0.3, 0.7), (0.3, 0.7)),
    )


def test_two_parallel_no_buffer_key_rows():
    model = build_model(ModelKind.TWO_PARALLEL_NO_BUFFER, _asymmetric_pair(0))
    a1, ao = 1.1 * 0.3, 2.3 * 0.3
    assert _find(model, (1, 1), (0, 1), 3.7).reset.source == (1, Z, 2)
    assert _find(model, (1, 1), (1, 1), ao).reset.source == (0, 0, 2)
    assert _find(model, (0, 1), (1, 1), a1).reset.source == (0, Z, 2)


def test_two_parallel_buffer1_key_rows():
    model = build_model(ModelKind.TWO_PARALLEL_BUFFER1, _asymmetric_pair(1))
    mu1, theta1 = 3.7, 5.3
    a1_q1, ao_q2 = 1.1 * 0.3, 2.3 * 0.7
    # Delivery from a full queue 1 while queue 2 idles/serves.
    assert _find(model, (2, 0), (1, 0), mu1).reset.source == (1, 2, Z, Z, Z)
    assert _find(model, (2, 1), (1, 1), mu1).reset.source == (1, 2, Z, 3, Z)
    # Background arrival appended in queue 2 behind its in-service update.
    assert _find(model, (0, 1), (0, 2), ao_q2).reset.source == (0, Z, Z, 3, 3)
    # Replacement of the last buffer slot in queue 1.
    assert _find(model, (2, 2), (2, 2), a1_q1).reset.source == (0, 1, Z, 3, 4)
    # Loss in queue 1 promotes the waiting update.
    assert _find(model, (2, 2), (1, 2), theta1).reset.source == (0, 2, Z, 3, 4)


def test_growth_masks_follow_occupancy():
    spec = QueueNetworkSpec.symmetric_parallel(2, 1.1, 2.3, 3.7, 5.3, buffer=1)
    model = build_model(ModelKind.TWO_PARALLEL_BUFFER1, spec)
    by_label = {lab: model.growth[i] for i, lab in enumerate(model.state_labels)}
    np.testing.assert_array_equal(by_label[(0, 0)], [1, 0, 0, 0, 0])
    np.testing.assert_array_equal(by_label[(2, 1)], [1, 1, 1, 1, 0])
    np.testing.assert_array_equal(by_label[(2, 2)], [1, 1, 1, 1, 1])


def _random_spec(kind, rng):
    lambda1 = 10 ** rng.uniform(-1, 2)
    lambda_rest = rng.choice([0.0, 10 ** rng.uniform(-1, 2)])
    mu = 10 ** rng.uniform(-1, 1)
    theta = rng.choice([0.0, 10 ** rng.uniform(-1, 1)])
    if kind in (ModelKind.SINGLE_NO_BUFFER, ModelKind.SINGLE_BUFFER2):
        buffer = 0 if kind is ModelKind.SINGLE_NO_BUFFER else 2
        return QueueNetworkSpec.single_queue(lambda1, lambda_rest, mu, theta, buffer)
    buffer = 0 if kind is ModelKind.TWO_PARALLEL_NO_BUFFER else 1
    p1 = rng.uniform(0.05, 0.95)
    p2 = rng.uniform(0.05, 0.95)
    mu2 = 10 ** rng.uniform(-1, 1)
    theta2 = theta if theta == 0 else 10 ** rng.uniform(-1, 1)
    return QueueNetworkSpec(
        sources=(lambda1, lambda_rest),
        servers=(
            Server(mu, theta, buffer),
            Server(mu2, theta2, buffer),
        ),
        routing=((p1, 1 - p1), (p2, 1 - p2)),
    )


def test_numeric_pi_matches_closed_form():
    rng = np.random.default_rng(7)
    for kind in ModelKind:
        for _ in range(30):
            spec = _random_spec(kind, rng)
            model = build_model(kind, spec)
            pi = stationary_distribution(model)
            np.testing.assert_allclose(pi, closed_form_pi(kind, spec), atol=1e-12)


def test_closed_form_pi_examples():
    mm11 = QueueNetworkSpec.single_queue(1.0, 0.0, 1.0, 0.0, 0)
    np.testing.assert_allclose(
        closed_form_pi(ModelKind.SINGLE_NO_BUFFER, mm11), [0.5, 0.5]
    )
    mm13 = QueueNetworkSpec.single_queue(2.0, 0.0, 1.0, 0.0, 2)
    np.testing.assert_allclose(
        closed_form_pi(ModelKind.SINGLE_BUFFER2, mm13),
        np.array([1, 2, 4, 8]) / 15,
    )
    pair = QueueNetworkSpec.symmetric_parallel(2, 2.0, 0.0, 1.0, 0.0, 0)
    np.testing.assert_allclose(
        closed_form_pi(ModelKind.TWO_PARALLEL_NO_BUFFER, pair), [0.25] * 4
    )
    pair1 = QueueNetworkSpec.symmetric_parallel(2, 2.0, 0.0, 1.0, 0.0, 1)
    np.testing.assert_allclose(
        closed_form_pi(ModelKind.TWO_PARALLEL_BUFFER1, pair1), [1 / 9] * 9
    )


def test_closed_form_pi_zero_denominator():
    spec = QueueNetworkSpec.single_queue(1.0, 0.0, mu=0.0, theta=0.0, buffer=0)
    with pytest.raises(ValueError):
        closed_form_pi(ModelKind.SINGLE_NO_BUFFER, spec)


def test_shs_matches_mm11_formula():
    rng = np.random.default_rng(21)
    for _ in range(25):
        spec = _random_spec(ModelKind.SINGLE_NO_BUFFER, rng)
        got = average_aoi(build_model(ModelKind.SINGLE_NO_BUFFER, spec)).average_aoi
        want = mm11_exact_aoi(
            spec.sources[0], spec.sources[1], spec.servers[0].theta, spec.servers[0].mu
        )
        assert got == pytest.approx(want, rel=1e-10)


def test_mm11_exact_aoi_values():
    assert mm11_exact_aoi(1, 0, 0, 1) == pytest.approx(2.0)
    assert mm11_exact_aoi(2, 10, 10, 1) == pytest.approx(11.5)
    assert mm11_exact_aoi(4, 0, 0, 1) == pytest.approx(1 / 4 + 1)
    with pytest.raises(ValueError):
        mm11_exact_aoi(0, 0, 0, 1)
    with pytest.raises(ValueError):
        mm11_exact_aoi(1, 0, 0, 0)


def test_relabeling_symmetry():
    rng = np.random.default_rng(3)
    for kind in (ModelKind.TWO_PARALLEL_NO_BUFFER, ModelKind.TWO_PARALLEL_BUFFER1):
        for _ in range(5):
            spec = _random_spec(kind, rng)
            swapped = QueueNetworkSpec(
                sources=spec.sources,
                servers=spec.servers[::-1],
                routing=tuple(row[::-1] for row in spec.routing),
            )
            a = average_aoi(build_model(kind, spec)).average_aoi
            b = average_aoi(build_model(kind, swapped)).average_aoi
            assert a == pytest.approx(b, rel=1e-12)


def test_parallel_pair_approaches_double_speed_single():
    spec = QueueNetworkSpec.symmetric_parallel(2, 1000.0, 0.0, 1.0, 0.0, 0)
    aoi = average_aoi(build_network_model(spec)).average_aoi
    assert aoi == pytest.approx(2 / 1000 + 1 / 2, rel=0.01)


def _comparison_values(family, lambda1):
    trio = comparison_specs(family, lambda1, 10.0, theta=10.0, mu=1.0)
    return {
        k: average_aoi(build_network_model(s)).average_aoi for k, s in trio.items()
    }


def test_routing_tracks_double_no_buffer():
    # Preemptive family: splitting traffic over two servers matches one
    # double-speed server closely at every load.
    for lambda1 in (0.1, 1.0, 10.0, 100.0, 1000.0):
        vals = _comparison_values("nobuffer", lambda1)
        assert abs(vals["routing"] - vals["double"]) / vals["double"] < 0.05


def test_routing_interpolates_half_and_double_with_buffers():
    # Buffered family: the parallel pair tracks the half-traffic queue at
    # low load and the double-speed queue at high load.
    low = _comparison_values("buffer", 0.1)
    assert abs(low["routing"] - low["half"]) / low["half"] < 0.10
    assert low["routing"] < low["half"]
    for lambda1 in (100.0, 1000.0):
        vals = _comparison_values("buffer", lambda1)
        assert abs(vals["routing"] - vals["double"]) / vals["double"] < 0.05


def test_comparison_specs_structure():
    trio = comparison_specs("buffer", 4.0, 6.0, theta=10.0, mu=1.5)
    assert trio["routing"].num_servers == 2
    assert trio["routing"].servers[0] == Server(1.5, 5.0, 1)
    assert trio["half"].sources == (2.0, 3.0)
    assert trio["half"].servers[0] == Server(1.5, 5.0, 2)
    assert trio["double"].sources == (4.0, 6.0)
    assert trio["double"].servers[0] == Server(3.0, 10.0, 2)
    with pytest.raises(ValueError):
        comparison_specs("bogus", 1.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        QueueNetworkSpec(sources=(), servers=(Server(1.0),), routing=())
    with pytest.raises(ValueError):
        QueueNetworkSpec(sources=(0.0,), servers=(Server(1.0),), routing=((1.0,),))
    with pytest.raises(ValueError):
        QueueNetworkSpec(sources=(1.0,), servers=(Server(1.0),), routing=((0.5,),))
    with pytest.raises(ValueError):
        QueueNetworkSpec(
            sources=(1.0,),
            servers=(Server(1.0), Server(1.0)),
            routing=((1.5, -0.5),),
        )
    with pytest.raises(ValueError):
        Server(mu=-1.0)
    with pytest.raises(ValueError):
        Server(mu=1.0, buffer=-2)


def test_kind_checks():
    spec = QueueNetworkSpec.single_queue(1.0, 0.0, 1.0, 0.0, buffer=1)
    assert kind_of(spec) is None
    with pytest.raises(ValueError):
        build_model(ModelKind.SINGLE_BUFFER2, spec)
    assert kind_of(QueueNetworkSpec.single_queue(1.0, buffer=2)) is ModelKind.SINGLE_BUFFER2


def test_spec_round_trip(tmp_path):
    spec = QueueNetworkSpec(
        sources=(2.0, 5.0),
        servers=(Server(1.0, 0.5, 1), Server(2.0, 0.0, 1)),
        routing=((0.25, 0.75), (0.5, 0.5)),
    )
    again = QueueNetworkSpec.from_dict(spec.to_dict())
    assert again == spec
    path = tmp_path / "net.json"
    path.write_text(json.dumps(spec.to_dict()))
    assert QueueNetworkSpec.load(str(path)) == spec
