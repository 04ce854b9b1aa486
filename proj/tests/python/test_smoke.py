"""Smoke test for the python bindings: build, train, evaluate, check."""

import math

import numpy as np

import mfnet


def approx(a, b, tol=1e-9):
    return abs(a - b) <= tol * (1.0 + max(abs(a), abs(b)))


def test_version():
    assert isinstance(mfnet.__version__, str) and mfnet.__version__


def test_basis_eval():
    basis = mfnet.Basis(mfnet.BasisSpec(mfnet.BasisKind.monomial, 2, 2))
    assert basis.cardinality == 6
    values = basis.eval(np.array([[2.0, 3.0]]))
    assert np.allclose(values[0], [1.0, 2.0, 3.0, 4.0, 6.0, 9.0])


def test_network_round_trip():
    node_basis = mfnet.BasisSpec(mfnet.BasisKind.monomial, 2, 1)
    edge_basis = mfnet.BasisSpec(mfnet.BasisKind.monomial, 1, 1)
    graph = mfnet.make_graph(3, [(1, 3), (2, 3)], node_basis, edge_basis)
    assert graph.n_nodes == 3
    assert graph.target == 3

    net = mfnet.Network(graph)
    assert net.input_dim == 1
    assert net.n_params() == 3 * 3 + 2 * 2

    params = net.init_params(mfnet.InitScheme.gaussian, 4, 0.3)
    assert params.shape == (net.n_params(),)

    points = np.linspace(-1.0, 1.0, 7).reshape(-1, 1)
    values = net.evaluate(params, 3, points)
    assert values.shape == (7,)

    # Zero parameters everywhere force a zero surrogate at every node.
    zeros = net.init_params(mfnet.InitScheme.zeros, 0)
    assert np.all(net.evaluate(zeros, 3, points) == 0.0)


def test_generated_truth_values():
    problem = mfnet.generate_three_model((2, 3, 3), True, 1)
    net = mfnet.Network(problem.graph)
    origin = np.zeros((1, 1))
    assert approx(net.evaluate(problem.true_params, 3, origin)[0],
                  -0.750314902945093, 1e-9)

    expansion = net.expand_to_polynomial(problem.true_params, 3)
    degree = max(sum(key) for key in expansion)
    assert degree == 3


def test_objective_and_gradient():
    problem = mfnet.generate_three_model((6, 8, 8), True, 5)
    net = mfnet.Network(problem.graph)
    params = net.init_params(mfnet.InitScheme.gaussian, 11, 0.4)

    value, grad = mfnet.total_nll(net, params, problem.datasets)
    assert math.isfinite(value)
    assert grad.shape == (net.n_params(),)

    worst, coordinate = mfnet.gradient_check(net, params, problem.datasets)
    assert worst <= 1e-6
    assert 0 <= coordinate < net.n_params()


def test_fit_recovers_truth():
    problem = mfnet.generate_three_model((10, 12, 14), True, 2)
    net = mfnet.Network(problem.graph)

    config = mfnet.FitConfig()
    config.seed = 3
    config.restarts = 2
    config.max_iters = 2000
    config.grad_tol = 1e-9
    result = mfnet.fit(net, problem.datasets, config)
    assert result.converged, result.reason
    assert result.iterations >= 1
    assert len(result.objective_trace) >= 2

    pred = net.evaluate(result.params, 3, problem.truth_x)
    rel = np.linalg.norm(pred - problem.truth_y) / np.linalg.norm(problem.truth_y)
    assert rel <= 1e-6

    # Single-fidelity solve on the same samples for comparison.
    data = problem.datasets[2]
    basis = mfnet.Basis(mfnet.BasisSpec(mfnet.BasisKind.monomial, 3, 1))
    coeffs = mfnet.single_fidelity_fit(basis, data.x, data.y)
    assert coeffs.shape == (4,)


def test_sparse_fit_and_kkt():
    problem = mfnet.generate_three_model((10, 12, 14), True, 8)
    net = mfnet.Network(problem.graph)

    config = mfnet.FitConfig()
    config.seed = 6
    config.max_iters = 3000
    config.reg = mfnet.RegConfig()
    config.reg.kind = mfnet.RegKind.laplace
    config.reg.default_lambda = 1e-3
    result = mfnet.fit_sparse(net, problem.datasets, config)
    assert result.converged, result.reason

    residual = mfnet.kkt_residual(net, result.params, problem.datasets, config.reg)
    assert residual <= 1e-4


def main():
    tests = [value for name, value in sorted(globals().items())
             if name.startswith("test_")]
    for test in tests:
        test()
        print(f"ok: {test.__name__}")
    print(f"all {len(tests)} python smoke tests passed")


if __name__ == "__main__":
    main()
