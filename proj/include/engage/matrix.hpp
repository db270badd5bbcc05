#ifndef ENGAGE_MATRIX_HPP
#define ENGAGE_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "engage/rng.hpp"

namespace engage {

// Dense row-major matrix of 64-bit reals. All downstream arithmetic
// (LSTM, head layers, losses) is built on this plus a handful of free
// functions below. No broadcasting, no views; shapes are checked and a
// ValidationError names both shapes on mismatch.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return values_.size(); }

    double& at(int r, int c) { return values_[static_cast<size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return values_[static_cast<size_t>(r) * cols_ + c]; }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    double* row(int r) { return values_.data() + static_cast<size_t>(r) * cols_; }
    const double* row(int r) const { return values_.data() + static_cast<size_t>(r) * cols_; }

    void fill(double v);
    bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
    bool all_finite() const;
    std::string shape_str() const;

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.values_ == b.values_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> values_;
};

// Trainable value plus its gradient accumulator, always shape-matched.
struct Param {
    Matrix value;
    Matrix grad;

    Param() = default;
    explicit Param(Matrix v) : value(std::move(v)) { grad = Matrix(value.rows(), value.cols()); }
    Param(int rows, int cols) : value(rows, cols), grad(rows, cols) {}

    void zero_grad() { grad.fill(0.0); }
};

// Named handle used by optimizers and the gradient checker. `decay`
// marks whether weight decay applies (false for biases and centers).
struct ParamRef {
    std::string name;
    Param* param = nullptr;
    bool decay = true;
};

void zero_grads(const std::vector<ParamRef>& params);

Matrix matmul(const Matrix& a, const Matrix& b);
// c += a * b without allocating; shapes checked against c.
void matmul_acc(Matrix& c, const Matrix& a, const Matrix& b);
// a * b^T and a^T * b, the two transposed products backprop needs.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
void matmul_nt_acc(Matrix& c, const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
void matmul_tn_acc(Matrix& c, const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

enum class EwOp { add, mul, tanh, sigmoid, relu };

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix tanh_m(const Matrix& a);
Matrix sigmoid_m(const Matrix& a);
Matrix relu_m(const Matrix& a);

// Tag-dispatch front door. add/mul take two inputs, the rest exactly one.
Matrix elementwise(EwOp op, const Matrix& a);
Matrix elementwise(EwOp op, const Matrix& a, const Matrix& b);

double sigmoid(double x);

// Unrolled dot product; fixed association order, deterministic per platform.
double dot(const double* a, const double* b, int n);

Matrix random_uniform(int rows, int cols, double lo, double hi, Rng& rng);

} // namespace engage

#endif
