import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from proxlab import (Dataset, MLProblemParams, generate_lasso_data, make_benchmark,
                     make_blob_dataset, make_ml_problem, reference_solution)


@pytest.fixture(scope="session")
def quad1d():
    return make_benchmark("quad1d")


@pytest.fixture(scope="session")
def quad_quartic():
    return make_benchmark("quad_quartic")


@pytest.fixture(scope="session")
def sine_quad():
    return make_benchmark("sine_quad")


@pytest.fixture(scope="session")
def wc_piecewise():
    return make_benchmark("wc_piecewise")


@pytest.fixture(scope="session")
def aniso_quad():
    return make_benchmark("aniso_quad")


@pytest.fixture(scope="session")
def lasso_toy():
    # A = I_2, y = (3, 0), lam = 1: minimizer (2, 0), optimal value 2.5.
    return make_ml_problem("lasso", (np.eye(2), np.array([3.0, 0.0])),
                           MLProblemParams("lasso", lam=1.0))


@pytest.fixture(scope="session")
def lasso_toy_ref(lasso_toy):
    return reference_solution(lasso_toy, effort=200)


@pytest.fixture(scope="session")
def en_toy():
    # A = I_1, y = 4, lam = 1, quadratic weight 1: minimizer 1.5.
    return make_ml_problem("elastic_net", (np.eye(1), np.array([4.0])),
                           MLProblemParams("elastic_net", lam=1.0, en_reg=1.0))


@pytest.fixture(scope="session")
def en_toy_ref(en_toy):
    return reference_solution(en_toy, effort=200)


@pytest.fixture(scope="session")
def svm_toy():
    data = Dataset(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]),
                   np.array([1.0, -1.0, 1.0, -1.0]), source="toy")
    return make_ml_problem("svm", data, MLProblemParams("svm", svm_reg=1.0))


@pytest.fixture(scope="session")
def svm_toy_ref(svm_toy):
    return reference_solution(svm_toy, effort=200)


@pytest.fixture(scope="session")
def lasso_f20(request):
    a_mat, y, xhat = generate_lasso_data(20, 50, 10, seed=7)
    problem = make_ml_problem("lasso", (a_mat, y), MLProblemParams("lasso", lam=10.0))
    return reference_solution(problem, effort=600, c_ref=1.0)


@pytest.fixture(scope="session")
def en_f20():
    a_mat, y, _ = generate_lasso_data(20, 50, 10, seed=7)
    problem = make_ml_problem("elastic_net", (a_mat, y),
                              MLProblemParams("elastic_net", lam=10.0, en_reg=1.0))
    return reference_solution(problem, effort=600, c_ref=1.0)


@pytest.fixture(scope="session")
def svm_blobs():
    data = make_blob_dataset(200, 10, seed=3, separation=1.0)
    problem = make_ml_problem("svm", data, MLProblemParams("svm", svm_reg=1.0))
    return reference_solution(problem, effort=400, c_ref=1.0)
