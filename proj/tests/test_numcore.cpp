#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "engage/common.hpp"
#include "engage/grad_check.hpp"
#include "engage/matrix.hpp"
#include "engage/rng.hpp"

using namespace engage;

namespace {

// Independent naive triple-loop product used as the oracle.
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols(); ++k) s += a.at(i, k) * b.at(k, j);
            c.at(i, j) = s;
        }
    return c;
}

Matrix random_matrix(int rows, int cols, Rng& rng, double lo = -2.0, double hi = 2.0) {
    return random_uniform(rows, cols, lo, hi, rng);
}

} // namespace

TEST_CASE("matmul identity and hand cases") {
    Matrix eye = Matrix::from_rows({{1, 0}, {0, 1}});
    Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
    CHECK(matmul(eye, m) == m);

    Matrix row = Matrix::from_rows({{1, 2}});
    Matrix col = Matrix::from_rows({{3}, {4}});
    Matrix prod = matmul(row, col);
    CHECK(prod.rows() == 1);
    CHECK(prod.cols() == 1);
    CHECK(prod.at(0, 0) == 11.0);
}

TEST_CASE("matmul matches the triple-loop oracle") {
    Rng rng(7);
    Matrix a = random_matrix(3, 4, rng);
    Matrix b = random_matrix(4, 2, rng);
    Matrix got = matmul(a, b);
    Matrix want = naive_matmul(a, b);
    for (int i = 0; i < got.rows(); ++i)
        for (int j = 0; j < got.cols(); ++j)
            CHECK(got.at(i, j) == doctest::Approx(want.at(i, j)).epsilon(1e-12));
}

TEST_CASE("matmul shape mismatch names both shapes") {
    Matrix a(2, 3);
    Matrix b(2, 2);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"), ValidationError);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x2"), ValidationError);
}

TEST_CASE("transposed products agree with transpose-then-multiply") {
    Rng rng(11);
    Matrix a = random_matrix(5, 3, rng);
    Matrix b = random_matrix(4, 3, rng);
    Matrix nt = matmul_nt(a, b);
    Matrix want = naive_matmul(a, transpose(b));
    for (int i = 0; i < nt.rows(); ++i)
        for (int j = 0; j < nt.cols(); ++j)
            CHECK(nt.at(i, j) == doctest::Approx(want.at(i, j)).epsilon(1e-12));

    Matrix c = random_matrix(3, 5, rng);
    Matrix d = random_matrix(3, 2, rng);
    Matrix tn = matmul_tn(c, d);
    Matrix want2 = naive_matmul(transpose(c), d);
    for (int i = 0; i < tn.rows(); ++i)
        for (int j = 0; j < tn.cols(); ++j)
            CHECK(tn.at(i, j) == doctest::Approx(want2.at(i, j)).epsilon(1e-12));
}

TEST_CASE("matmul associativity on random triples") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix a = random_matrix(3, 4, rng);
        Matrix b = random_matrix(4, 5, rng);
        Matrix c = random_matrix(5, 2, rng);
        Matrix left = matmul(matmul(a, b), c);
        Matrix right = matmul(a, matmul(b, c));
        for (int i = 0; i < left.rows(); ++i)
            for (int j = 0; j < left.cols(); ++j) {
                double denom = std::max({std::fabs(left.at(i, j)), std::fabs(right.at(i, j)), 1.0});
                CHECK(std::fabs(left.at(i, j) - right.at(i, j)) / denom < 1e-9);
            }
    }
}

TEST_CASE("elementwise trivial values") {
    Matrix zeros(2, 3);
    CHECK(elementwise(EwOp::tanh, zeros) == zeros);

    Matrix halves(2, 3, 0.5);
    CHECK(elementwise(EwOp::sigmoid, zeros) == halves);

    Matrix in = Matrix::from_rows({{-1, 2}});
    Matrix want = Matrix::from_rows({{0, 2}});
    CHECK(elementwise(EwOp::relu, in) == want);

    Matrix a = Matrix::from_rows({{1, 2}});
    Matrix b = Matrix::from_rows({{3, 5}});
    CHECK(elementwise(EwOp::add, a, b) == Matrix::from_rows({{4, 7}}));
    CHECK(elementwise(EwOp::mul, a, b) == Matrix::from_rows({{3, 10}}));

    CHECK_THROWS_AS(elementwise(EwOp::add, a), ValidationError);
    CHECK_THROWS_AS(elementwise(EwOp::tanh, a, b), ValidationError);
    CHECK_THROWS_AS(add(Matrix(1, 2), Matrix(2, 1)), ValidationError);
}

TEST_CASE("elementwise outputs stay finite for large inputs") {
    Matrix big = Matrix::from_rows({{-800.0, 800.0, 0.0}});
    CHECK(sigmoid_m(big).all_finite());
    CHECK(tanh_m(big).all_finite());
    CHECK(relu_m(big).all_finite());
}

TEST_CASE("grad_check on x^2 is exact to rounding") {
    Param x(1, 1);
    x.value.at(0, 0) = 3.0;
    auto loss = [&x] {
        double v = x.value.at(0, 0);
        x.grad.at(0, 0) += 2.0 * v;
        return v * v;
    };
    double err = grad_check(loss, {{"x", &x, false}}, 1e-5);
    CHECK(err < 1e-8);
}

TEST_CASE("grad_check on sum(tanh(x))") {
    Rng rng(3);
    Param x(Matrix(random_uniform(2, 2, -1.0, 1.0, rng)));
    auto loss = [&x] {
        double sum = 0.0;
        for (size_t i = 0; i < x.value.size(); ++i) {
            double t = std::tanh(x.value.data()[i]);
            sum += t;
            x.grad.data()[i] += 1.0 - t * t;
        }
        return sum;
    };
    double err = grad_check(loss, {{"x", &x, false}}, 1e-5);
    CHECK(err < 1e-6);
}

TEST_CASE("grad_check with no parameters returns 0") {
    CHECK(grad_check([] { return 1.5; }, {}, 1e-5) == 0.0);
}

TEST_CASE("grad_check flags non-finite loss with the parameter name") {
    Param x(1, 1);
    auto loss = [] { return std::numeric_limits<double>::quiet_NaN(); };
    CHECK_THROWS_AS(grad_check(loss, {{"bad_param", &x, false}}, 1e-5), NumericError);
}

TEST_CASE("grad_check for sigmoid and relu away from the kink") {
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        Param x(Matrix(random_uniform(3, 2, -2.0, 2.0, rng)));
        // keep every element clear of the relu kink
        for (size_t i = 0; i < x.value.size(); ++i)
            if (std::fabs(x.value.data()[i]) < 1e-3) x.value.data()[i] = 0.5;

        auto sig_loss = [&x] {
            double sum = 0.0;
            for (size_t i = 0; i < x.value.size(); ++i) {
                double s = sigmoid(x.value.data()[i]);
                sum += s;
                x.grad.data()[i] += s * (1.0 - s);
            }
            return sum;
        };
        CHECK(grad_check(sig_loss, {{"x", &x, false}}, 1e-5) < 1e-6);

        auto relu_loss = [&x] {
            double sum = 0.0;
            for (size_t i = 0; i < x.value.size(); ++i) {
                double v = x.value.data()[i];
                sum += v > 0.0 ? v : 0.0;
                x.grad.data()[i] += v > 0.0 ? 1.0 : 0.0;
            }
            return sum;
        };
        CHECK(grad_check(relu_loss, {{"x", &x, false}}, 1e-5) < 1e-6);
    }
}

TEST_CASE("zero_grads resets accumulation") {
    Param x(Matrix::from_rows({{1.0, -2.0}}));
    auto backward_sum = [&x] {
        for (size_t i = 0; i < x.value.size(); ++i) x.grad.data()[i] += 1.0;
    };
    backward_sum();
    backward_sum();
    CHECK(x.grad.at(0, 0) == 2.0);
    zero_grads({{"x", &x, false}});
    backward_sum();
    CHECK(x.grad.at(0, 0) == 1.0);
    CHECK(x.grad.at(0, 1) == 1.0);
}

TEST_CASE("rng streams are deterministic and shuffles reproducible") {
    Rng a(99), b(99);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c(5), d(5);
    std::vector<int> v1{1, 2, 3, 4, 5, 6, 7};
    std::vector<int> v2 = v1;
    c.shuffle(v1);
    d.shuffle(v2);
    CHECK(v1 == v2);

    // uniform_int stays in range and hits every bucket eventually
    Rng e(1);
    std::array<int, 4> counts{0, 0, 0, 0};
    for (int i = 0; i < 1000; ++i) counts[e.uniform_int(4)]++;
    for (int count : counts) CHECK(count > 150);
}
