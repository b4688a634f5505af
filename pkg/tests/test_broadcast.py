"""Broadcast runs, the redundancy obstruction, and statistics reconstruction."""

import math

import numpy as np
import pytest

from semibroadcast import broadcast, interact, qcore, thermal
from semibroadcast.errors import (
    DegenerateOutcomeWarning,
    DimensionBudgetExceeded,
    DimensionMismatch,
    InvalidBlocks,
    NonPositiveMemoryEntropy,
    NotInvertible,
)

LN2 = math.log(2.0)
E_INV = math.exp(-1.0)
W0 = 1.0 / (1.0 + E_INV)
W1 = 1.0 - W0

S_GIBBS = 0.5822031088882179
SEQ_DEFECT_P37 = 0.10757656854799805  # (1 - W0) * |0.3 - 0.7|, scalar oracle


def qubit_unit(beta=1.0, kind="noninvasive", variant=0):
    return broadcast.thermal_unit(
        thermal.qubit_chain_hamiltonian(1), beta, 2, kind=kind, variant=variant
    )


def ladder_unit(d_s, beta=1.0, kind="noninvasive", variant=0):
    h = thermal.MemoryHamiltonian(list(range(d_s)))
    return broadcast.thermal_unit(h, beta, d_s, kind=kind, variant=variant)


# ------------------------------------------------------------- memory parts


def test_memory_unit_validates_dimensions():
    h = thermal.qubit_chain_hamiltonian(1)
    g = thermal.group_energies(h, 2)
    u = interact.build_noninvasive_maxcorr(g)
    with pytest.raises(DimensionMismatch):
        broadcast.MemoryUnit(h, qcore.random_density(4, seed=0), g, u)


def test_memory_unit_rejects_foreign_interaction():
    h2 = thermal.qubit_chain_hamiltonian(2)
    g2 = thermal.group_energies(h2, 2)
    u2 = interact.build_noninvasive_maxcorr(g2)
    h1 = thermal.qubit_chain_hamiltonian(1)
    g1 = thermal.group_energies(h1, 2)
    tau1 = thermal.gibbs(h1, 1.0)
    with pytest.raises(DimensionMismatch):
        broadcast.MemoryUnit(h1, tau1.state, g1, u2)


def test_explicit_unit_rejects_unknown_kind():
    h = thermal.qubit_chain_hamiltonian(1)
    with pytest.raises(DimensionMismatch):
        broadcast.explicit_unit(h, qcore.basis_state(2, 0), 2, kind="sideways")


def test_memory_array_needs_consistent_system_dimension():
    with pytest.raises(DimensionMismatch):
        broadcast.MemoryArray(2, (qubit_unit(), ladder_unit(3)))
    with pytest.raises(DimensionMismatch):
        broadcast.MemoryArray(2, ())


def test_memory_array_dimension_accounting():
    mem = broadcast.MemoryArray(2, (qubit_unit(), qubit_unit(0.5)))
    assert mem.dims == (2, 2)
    assert mem.total_dim() == 8


# --------------------------------------------------------- sequential local


def test_sequential_run_reads_the_same_statistics_on_every_unit():
    # non-invasive writes leave the diagonal alone, so both units see A p
    mem = broadcast.MemoryArray(2, (qubit_unit(), qubit_unit()))
    p = [0.3, 0.7]
    run = broadcast.run_sequential_local(qcore.diag_density(p), mem)
    unit = mem.units[0]
    tau = thermal.gibbs(unit.hamiltonian, unit.beta)
    a = interact.transition_matrix(unit.interaction, tau, unit.grouping)
    expected = a.pushforward(p)
    for qi in run.q:
        assert qi.tolist() == pytest.approx(expected.tolist(), abs=1e-13)
    assert run.mode == broadcast.SEQUENTIAL_LOCAL
    assert run.state.dims == (2, 2, 2)


def test_sequential_defect_matches_closed_form():
    mem = broadcast.MemoryArray(2, (qubit_unit(), qubit_unit()))
    run = broadcast.run_sequential_local(qcore.diag_density([0.3, 0.7]), mem)
    assert run.defects["ideal_scb"] == pytest.approx(SEQ_DEFECT_P37, abs=1e-13)
    assert broadcast.ideal_scb_defect(run) == run.defects["ideal_scb"]


def test_sequential_system_diagonal_history_is_flat_for_noninvasive():
    mem = broadcast.MemoryArray(2, (qubit_unit(), qubit_unit(0.4), qubit_unit(2.0)))
    p = [0.25, 0.75]
    run = broadcast.run_sequential_local(qcore.diag_density(p), mem)
    assert run.p_initial.tolist() == pytest.approx(p, abs=1e-15)
    assert len(run.system_diag_history) == 3  # one snapshot after each write
    for diag in run.system_diag_history:
        assert diag.tolist() == pytest.approx(p, abs=1e-13)


def test_uniform_input_is_a_fixed_point_of_the_statistics():
    mem = broadcast.MemoryArray(2, (qubit_unit(), qubit_unit()))
    run = broadcast.run_sequential_local(qcore.diag_density([0.5, 0.5]), mem)
    assert run.defects["ideal_scb"] <= 1e-13


def test_mixed_unit_sizes_each_push_through_their_own_map():
    big = broadcast.thermal_unit(thermal.qubit_chain_hamiltonian(2), 0.5, 2)
    mem = broadcast.MemoryArray(2, (qubit_unit(), big))
    p = [0.2, 0.8]
    run = broadcast.run_sequential_local(qcore.diag_density(p), mem)
    for unit, qi in zip(mem.units, run.q):
        tau = thermal.gibbs(unit.hamiltonian, unit.beta)
        a = interact.transition_matrix(unit.interaction, tau, unit.grouping)
        assert qi.tolist() == pytest.approx(a.pushforward(p).tolist(), abs=1e-13)


def test_pure_memories_record_statistics_exactly():
    h = thermal.qubit_chain_hamiltonian(1)
    units = tuple(
        broadcast.explicit_unit(h, qcore.basis_state(2, 0), 2, kind="noninvasive")
        for _ in range(2)
    )
    run = broadcast.run_sequential_local(
        qcore.diag_density([0.3, 0.7]), broadcast.MemoryArray(2, units)
    )
    assert run.defects["ideal_scb"] <= 1e-12


def test_swap_chain_disturbs_later_readouts():
    # first write is exact, the second reads the deposited register instead
    mem = broadcast.MemoryArray(2, (qubit_unit(kind="swap"), qubit_unit(kind="swap")))
    with pytest.warns(DegenerateOutcomeWarning):
        run = broadcast.run_sequential_local(qcore.diag_density([1.0, 0.0]), mem)
    assert run.q[0].tolist() == pytest.approx([1.0, 0.0], abs=1e-14)
    assert run.q[1].tolist() == pytest.approx([W0, W1], abs=1e-14)
    assert run.defects["ideal_scb"] == pytest.approx(W1, abs=1e-13)


def test_input_label_ensembles_are_the_written_conditionals():
    mem = broadcast.MemoryArray(2, (qubit_unit(),))
    run = broadcast.run_sequential_local(qcore.diag_density([0.3, 0.7]), mem)
    ens = run.ensembles[0]
    assert ens.probs.tolist() == pytest.approx([0.3, 0.7], abs=1e-14)
    assert np.allclose(ens.states[0].matrix, np.diag([W0, W1]), atol=1e-14)
    assert np.allclose(ens.states[1].matrix, np.diag([W1, W0]), atol=1e-14)


def test_final_state_rank_is_memory_bound_for_pure_inputs():
    psi = np.array([math.sqrt(0.3), math.sqrt(0.7)])
    rho = qcore.DensityOperator(np.outer(psi, psi))
    run = broadcast.run_sequential_local(rho, broadcast.MemoryArray(2, (qubit_unit(),)))
    eigs = np.linalg.eigvalsh(run.state.matrix)
    assert int(np.sum(eigs > 1e-12)) == 2


def test_dense_budget_is_enforced():
    big = broadcast.thermal_unit(thermal.qubit_chain_hamiltonian(4), 1.0, 2)
    mem = broadcast.MemoryArray(2, (big, big, big))
    with pytest.raises(DimensionBudgetExceeded):
        broadcast.run_sequential_local(qcore.diag_density([0.4, 0.6]), mem)


def test_system_dimension_mismatch_is_rejected():
    mem = broadcast.MemoryArray(2, (qubit_unit(),))
    with pytest.raises(DimensionMismatch):
        broadcast.run_sequential_local(qcore.random_density(3, seed=1), mem)


# ------------------------------------------------------------------- global


def test_global_swap_is_not_locally_unbiased():
    mem = broadcast.MemoryArray(2, (qubit_unit(), qubit_unit()))
    run = broadcast.run_global(qcore.diag_density([0.3, 0.7]), mem, kind="swap")
    assert run.mode == broadcast.GLOBAL
    assert run.defects["ideal_scb"] > 1e-6
    assert run.state.dims == (2, 2, 2)


def test_global_register_as_a_whole_is_unbiased():
    # reading the merged sector register of the same coupling recovers p
    units = (qubit_unit(), qubit_unit())
    merged_h = thermal.product_hamiltonian([u.hamiltonian for u in units])
    merged = broadcast.thermal_unit(merged_h, 1.0, 2, kind="swap")
    run = broadcast.run_sequential_local(
        qcore.diag_density([0.3, 0.7]), broadcast.MemoryArray(2, (merged,))
    )
    assert run.defects["ideal_scb"] <= 1e-12


def test_global_noninvasive_keeps_system_diagonal():
    mem = broadcast.MemoryArray(2, (qubit_unit(), qubit_unit()))
    p = [0.35, 0.65]
    run = broadcast.run_global(qcore.diag_density(p), mem, kind="noninvasive")
    assert run.system_diag_history[-1].tolist() == pytest.approx(p, abs=1e-13)


# ------------------------------------------------------------------ witness


def test_witness_matches_published_arithmetic():
    w = broadcast.nogo_witness(0.0, 0.58234, 0.0, 2)
    assert w.violated
    assert w.k == 1
    assert w.lhs == pytest.approx(1.16468, abs=1e-12)
    assert w.rhs == pytest.approx(LN2, abs=1e-12)


def test_witness_finds_deep_doubling_levels():
    w = broadcast.nogo_witness(0.0, 0.01, 0.0, 2)
    assert w.violated
    assert w.k == 7
    assert 2.0**6 * 0.01 <= LN2  # one level earlier the count still fits


def test_witness_with_thermal_qubit_entropy():
    w = broadcast.nogo_witness(0.0, S_GIBBS, 0.0, 2)
    assert w.k == 1
    assert w.lhs == pytest.approx(2.0 * S_GIBBS, abs=1e-13)


def test_witness_inapplicable_when_labels_carry_more_entropy():
    w = broadcast.nogo_witness(0.3, 0.2, 0.5, 2)
    assert not w.violated
    assert w.k is None and w.lhs is None and w.rhs is None


def test_witness_input_validation():
    with pytest.raises(NonPositiveMemoryEntropy):
        broadcast.nogo_witness(0.1, 0.0, 0.1, 2)
    with pytest.raises(NonPositiveMemoryEntropy):
        broadcast.nogo_witness(0.1, -0.2, 0.1, 2)
    with pytest.raises(DimensionMismatch):
        broadcast.nogo_witness(0.1, 0.2, 0.1, 1)
    with pytest.raises(DimensionMismatch):
        broadcast.nogo_witness(-0.1, 0.2, 0.1, 2)


# ------------------------------------------------------------ reconstruction


def test_reconstruct_two_outcome_example():
    p = broadcast.reconstruct_p([[0.38, 0.62]], 0.8, 2)
    assert p.tolist() == pytest.approx([0.3, 0.7], abs=1e-12)


def test_reconstruct_three_outcome_example():
    q = [0.425, 0.315, 0.26]
    p = broadcast.reconstruct_p([q, q], 0.7, 3)
    assert p.tolist() == pytest.approx([0.5, 0.3, 0.2], abs=1e-12)


def test_reconstruct_perfect_memory_is_identity():
    p = broadcast.reconstruct_p([[0.3, 0.7]], 1.0, 2)
    assert p.tolist() == pytest.approx([0.3, 0.7], abs=1e-15)


def test_reconstruct_rejects_uninformative_memory():
    with pytest.raises(NotInvertible):
        broadcast.reconstruct_p([[0.5, 0.5]], 0.5, 2)
    with pytest.raises(NotInvertible):
        broadcast.reconstruct_p([[0.5, 0.5]], 0.5 + 1e-10, 2)
    # just outside the guard band inversion works again
    broadcast.reconstruct_p([[0.5, 0.5]], 0.51, 2)


def test_reconstruct_validates_variant_count_and_size():
    with pytest.raises(DimensionMismatch):
        broadcast.reconstruct_p([[0.38, 0.62], [0.38, 0.62]], 0.8, 2)
    with pytest.raises(DimensionMismatch):
        broadcast.reconstruct_p([[0.2, 0.3, 0.5], [0.2, 0.3, 0.5]], 0.8, 4)


def test_reconstruct_clips_rounding_noise_at_zero():
    c = 0.8
    q = [c + 0.2 / 1.0 * 0.0, 0.0, 0.0]  # placeholder replaced below
    # exact q for p = (1, 0, 0) at c_max = 0.8, then nudged by -5e-13
    base = [0.8, 0.1, 0.1]
    q = [[base[0], base[1] - 5e-13, base[2] + 5e-13], [base[0], base[1], base[2]]]
    p = broadcast.reconstruct_p(q, c, 3)
    assert p[0] == pytest.approx(1.0, abs=1e-11)
    assert np.all(p >= 0.0)


def test_reconstruct_round_trip_through_dense_simulation():
    # all d_S - 1 cycled variants on a three-level ladder memory
    d_s = 3
    h = thermal.MemoryHamiltonian([0.0, 1.0, 2.0])
    tau = thermal.gibbs(h, 1.0)
    g = thermal.group_energies(h, d_s)
    p_true = [0.5, 0.3, 0.2]
    q = []
    for i in range(d_s - 1):
        unit = broadcast.thermal_unit(h, 1.0, d_s, kind="cycled", variant=i)
        run = broadcast.run_sequential_local(
            qcore.diag_density(p_true), broadcast.MemoryArray(d_s, (unit,))
        )
        q.append(run.q[0])
    p_hat = broadcast.reconstruct_p(q, thermal.c_max(g, tau), d_s)
    assert p_hat.tolist() == pytest.approx(p_true, abs=1e-12)


def test_reconstruct_sees_only_the_diagonal_of_coherent_inputs():
    d_s = 2
    h = thermal.qubit_chain_hamiltonian(1)
    tau = thermal.gibbs(h, 1.0)
    g = thermal.group_energies(h, d_s)
    psi = np.array([math.sqrt(0.3), math.sqrt(0.7) * np.exp(0.4j)])
    rho = qcore.DensityOperator(np.outer(psi, psi.conj()))
    unit = broadcast.thermal_unit(h, 1.0, d_s, kind="cycled", variant=0)
    run = broadcast.run_sequential_local(rho, broadcast.MemoryArray(d_s, (unit,)))
    p_hat = broadcast.reconstruct_p([run.q[0]], thermal.c_max(g, tau), d_s)
    assert p_hat.tolist() == pytest.approx([0.3, 0.7], abs=1e-12)


# --------------------------------------------------- ideal broadcast states


def test_ideal_state_single_rank_one_component():
    state = broadcast.ideal_broadcasting_state(
        [0.3, 0.7], [[np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]]
    )
    assert state.dims == (2, 2)
    assert np.allclose(state.matrix, np.diag([0.3, 0.0, 0.0, 0.7]))


def test_ideal_state_two_components_is_ghz_diagonal():
    blocks = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    state = broadcast.ideal_broadcasting_state([0.5, 0.5], [blocks, blocks])
    expected = np.zeros(8)
    expected[0] = expected[7] = 0.5
    assert np.allclose(state.matrix, np.diag(expected))


def test_ideal_state_normalizes_blocks():
    state = broadcast.ideal_broadcasting_state(
        [0.3, 0.7], [[np.diag([4.0, 0.0]), np.diag([0.0, 0.25])]]
    )
    assert np.allclose(state.matrix, np.diag([0.3, 0.0, 0.0, 0.7]))


def test_ideal_state_mutual_information_equals_label_entropy():
    w = np.array([W0, W1])
    blocks = [np.diag([w[0], w[1], 0.0, 0.0]), np.diag([0.0, 0.0, w[0], w[1]])]
    for n in (1, 2, 3):
        state = broadcast.ideal_broadcasting_state([0.3, 0.7], [blocks] * n)
        for j in range(n):
            mi = broadcast.objectivity_mutual_info(state, j)
            assert mi == pytest.approx(qcore.shannon_entropy([0.3, 0.7]), abs=1e-10)


def test_ideal_state_rejects_bad_blocks():
    good = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    overlap = [np.diag([1.0, 0.0]), np.diag([0.6, 0.4])]
    with pytest.raises(InvalidBlocks):
        broadcast.ideal_broadcasting_state([0.3, 0.7], [overlap])
    with pytest.raises(InvalidBlocks):
        broadcast.ideal_broadcasting_state([0.3, 0.7], [])
    with pytest.raises(InvalidBlocks):
        broadcast.ideal_broadcasting_state([0.3, 0.7], [good[:1]])
    with pytest.raises(InvalidBlocks):
        broadcast.ideal_broadcasting_state(
            [0.3, 0.7], [[np.diag([1.0, -0.2]), np.diag([0.0, 1.0])]]
        )
    with pytest.raises(InvalidBlocks):
        broadcast.ideal_broadcasting_state(
            [0.3, 0.7], [[np.array([[0.0, 1.0], [0.0, 0.0]]), np.diag([0.0, 1.0])]]
        )


def test_ideal_state_rejects_bad_off_block():
    good = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    with pytest.raises(InvalidBlocks):
        broadcast.ideal_broadcasting_state([0.3, 0.7], [good], off=np.zeros((3, 3)))
    off = np.zeros((4, 4), dtype=complex)
    off[0, 3] = off[3, 0] = 0.9  # destroys positivity
    with pytest.raises(InvalidBlocks):
        broadcast.ideal_broadcasting_state([0.3, 0.7], [good], off=off)


def test_simulated_coherent_write_assembles_as_ideal_state_with_off_block():
    # memory prepared inside sector 0 only: records become orthogonal and the
    # simulated joint state is exactly of the broadcast form plus coherences
    h = thermal.qubit_chain_hamiltonian(2)
    tau = thermal.gibbs(h, 1.0)
    sector0 = np.array([tau.probs[0], tau.probs[1], 0.0, 0.0])
    sigma = qcore.diag_density(sector0 / sector0.sum())
    units = tuple(broadcast.explicit_unit(h, sigma, 2, kind="noninvasive") for _ in range(2))
    psi = np.array([math.sqrt(0.3), math.sqrt(0.7)])
    rho = qcore.DensityOperator(np.outer(psi, psi))
    run = broadcast.run_sequential_local(rho, broadcast.MemoryArray(2, units))
    assert run.defects["ideal_scb"] <= 1e-12

    conditionals = []
    for x in range(2):
        out = interact.apply(units[0].interaction, qcore.basis_state(2, x), sigma)
        conditionals.append(qcore.partial_trace(out, (1,)).matrix)
    diag_part = np.zeros_like(run.state.matrix)
    for x, px in enumerate([0.3, 0.7]):
        term = np.zeros((2, 2))
        term[x, x] = 1.0
        diag_part += px * np.kron(np.kron(term, conditionals[x]), conditionals[x])
    rebuilt = broadcast.ideal_broadcasting_state(
        [0.3, 0.7],
        [conditionals, conditionals],
        off=run.state.matrix - diag_part,
    )
    assert np.allclose(rebuilt.matrix, run.state.matrix, atol=1e-12)
    for j in range(2):
        mi = broadcast.objectivity_mutual_info(run.state, j)
        assert mi == pytest.approx(qcore.shannon_entropy([0.3, 0.7]), abs=1e-10)


def test_objectivity_mutual_info_degenerate_cases():
    blocks = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    lopsided = broadcast.ideal_broadcasting_state([1.0, 0.0], [blocks])
    assert broadcast.objectivity_mutual_info(lopsided, 0) == pytest.approx(0.0, abs=1e-12)
    product = qcore.tensor(qcore.diag_density([0.3, 0.7]), qcore.diag_density([0.5, 0.5]))
    assert broadcast.objectivity_mutual_info(product, 0) == pytest.approx(0.0, abs=1e-12)


# -------------------------------------------------------------------- sweep


def test_sweep_rows_are_sorted_and_complete():
    rows = broadcast.sweep_cmax_convergence([5, 1, 3], [1.0, 0.1])
    assert len(rows) == 6
    assert [(n, bw) for n, bw, _ in rows] == [
        (1, 0.1), (3, 0.1), (5, 0.1), (1, 1.0), (3, 1.0), (5, 1.0)
    ]


def test_sweep_values_match_the_analytic_path():
    rows = broadcast.sweep_cmax_convergence([1, 7, 25], thermal.BETA_OMEGA_DEFAULTS)
    for n, bw, c in rows:
        assert c == thermal.c_max_qubits_analytic(n, bw)
        assert 0.5 <= c <= 1.0
    lookup = {(n, bw): c for n, bw, c in rows}
    assert lookup[(1, 1.0)] == pytest.approx(W0, abs=1e-14)
