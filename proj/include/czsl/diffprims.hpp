#pragma once

#include <functional>
#include <optional>
#include <string>

#include "czsl/linalg.hpp"

namespace czsl {

// Named view over a parameter block and its gradient block. The optimizer,
// checkpointing and gradient checking all work off these.
struct TensorRef {
    std::string name;
    double* data = nullptr;
    double* grad = nullptr;
    size_t size = 0;
    std::vector<uint32_t> dims;
};

// y = W x + b with gradient accumulation.
struct Affine {
    Mat W, gW;
    Vec b, gb;

    Affine() = default;
    Affine(int out, int in) : W(out, in), gW(out, in), b(out, 0.0), gb(out, 0.0) {}

    int in_dim() const { return W.cols; }
    int out_dim() const { return W.rows; }

    void init(Rng& rng);  // uniform(-a, a), a = sqrt(6/(fan_in+fan_out))
    void zero_grad();

    Vec forward(const Vec& x) const;
    // Accumulates dW = up x^T, db = up; returns W^T up.
    Vec backward(const Vec& x, const Vec& up);

    void collect(const std::string& prefix, std::vector<TensorRef>& out);
};

// Two-layer perceptron y = W2 tanh(W1 x + b1) + b2.
struct Mlp2 {
    Affine l1, l2;

    Mlp2() = default;
    Mlp2(int in, int hidden, int out) : l1(hidden, in), l2(out, hidden) {}

    int in_dim() const { return l1.in_dim(); }
    int out_dim() const { return l2.out_dim(); }

    void init(Rng& rng);
    void zero_grad();

    Vec forward(const Vec& x) const;
    Vec backward(const Vec& x, const Vec& up);

    void collect(const std::string& prefix, std::vector<TensorRef>& out);
};

// max(0, gamma - s_pos + s_neg); subgradients are zero at the kink.
double hinge(double gamma, double s_pos, double s_neg,
             double* d_pos = nullptr, double* d_neg = nullptr);

struct GradCheckReport {
    double max_rel_err = 0.0;
    size_t checked = 0;
    size_t skipped = 0;  // probes flagged by the kink guard
    bool ok = false;
};

// Probe-level nonsmoothness detector: given loss values at +eps, -eps and the
// unperturbed point, returns true when the probe straddles a kink and should
// be skipped rather than failed.
using KinkGuard = std::function<bool(double lp, double lm, double base, double eps)>;

// Detector tuned for hinge losses: a kink inside the probe interval makes the
// symmetric second difference O(eps) instead of the smooth O(eps^2).
bool hinge_kink_guard(double lp, double lm, double base, double eps);

// Compares analytic gradients against central finite differences.
// eval() must zero the referenced gradients, run forward+backward, and return
// the loss. Probes flagged by the guard are counted in the report as skipped.
GradCheckReport grad_check(const std::function<double()>& eval,
                           const std::vector<TensorRef>& params,
                           double eps, double tol,
                           const KinkGuard& kink_guard = nullptr);

}  // namespace czsl
