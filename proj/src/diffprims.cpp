#include "czsl/diffprims.hpp"

#include <algorithm>
#include <cmath>

namespace czsl {

void Affine::init(Rng& rng) {
    const double a = std::sqrt(6.0 / (W.cols + W.rows));
    for (auto& w : W.a) w = (rng.uniform() * 2.0 - 1.0) * a;
    std::fill(b.begin(), b.end(), 0.0);
}

void Affine::zero_grad() {
    std::fill(gW.a.begin(), gW.a.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
}

Vec Affine::forward(const Vec& x) const {
    if (static_cast<int>(x.size()) != W.cols)
        throw std::invalid_argument("Affine::forward: dimension mismatch");
    Vec y(W.rows);
    for (int r = 0; r < W.rows; ++r) {
        double s = b[r];
        const double* wr = &W.a[static_cast<size_t>(r) * W.cols];
        for (int c = 0; c < W.cols; ++c) s += wr[c] * x[c];
        y[r] = s;
    }
    return y;
}

Vec Affine::backward(const Vec& x, const Vec& up) {
    if (static_cast<int>(x.size()) != W.cols || static_cast<int>(up.size()) != W.rows)
        throw std::invalid_argument("Affine::backward: dimension mismatch");
    Vec dx(W.cols, 0.0);
    for (int r = 0; r < W.rows; ++r) {
        const double u = up[r];
        gb[r] += u;
        double* gr = &gW.a[static_cast<size_t>(r) * W.cols];
        const double* wr = &W.a[static_cast<size_t>(r) * W.cols];
        for (int c = 0; c < W.cols; ++c) {
            gr[c] += u * x[c];
            dx[c] += wr[c] * u;
        }
    }
    return dx;
}

void Affine::collect(const std::string& prefix, std::vector<TensorRef>& out) {
    out.push_back({prefix + ".W", W.a.data(), gW.a.data(), W.a.size(),
                   {static_cast<uint32_t>(W.rows), static_cast<uint32_t>(W.cols)}});
    out.push_back({prefix + ".b", b.data(), gb.data(), b.size(),
                   {static_cast<uint32_t>(b.size())}});
}

void Mlp2::init(Rng& rng) {
    l1.init(rng);
    l2.init(rng);
}

void Mlp2::zero_grad() {
    l1.zero_grad();
    l2.zero_grad();
}

Vec Mlp2::forward(const Vec& x) const {
    Vec h = l1.forward(x);
    for (auto& v : h) v = std::tanh(v);
    return l2.forward(h);
}

Vec Mlp2::backward(const Vec& x, const Vec& up) {
    Vec pre = l1.forward(x);
    Vec h(pre.size());
    for (size_t i = 0; i < pre.size(); ++i) h[i] = std::tanh(pre[i]);
    Vec dh = l2.backward(h, up);
    for (size_t i = 0; i < dh.size(); ++i) dh[i] *= 1.0 - h[i] * h[i];
    return l1.backward(x, dh);
}

void Mlp2::collect(const std::string& prefix, std::vector<TensorRef>& out) {
    l1.collect(prefix + ".l1", out);
    l2.collect(prefix + ".l2", out);
}

double hinge(double gamma, double s_pos, double s_neg, double* d_pos, double* d_neg) {
    const double v = gamma - s_pos + s_neg;
    if (v > 0.0) {
        if (d_pos) *d_pos = -1.0;
        if (d_neg) *d_neg = 1.0;
        return v;
    }
    if (d_pos) *d_pos = 0.0;
    if (d_neg) *d_neg = 0.0;
    return 0.0;
}

bool hinge_kink_guard(double lp, double lm, double base, double eps) {
    return std::abs(lp + lm - 2.0 * base) > 10.0 * eps * eps;
}

GradCheckReport grad_check(const std::function<double()>& eval,
                           const std::vector<TensorRef>& params,
                           double eps, double tol,
                           const KinkGuard& kink_guard) {
    GradCheckReport rep;
    const double base = eval();
    if (!std::isfinite(base)) throw std::runtime_error("grad_check: non-finite loss");

    // Snapshot analytic gradients before perturbing.
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.emplace_back(p.grad, p.grad + p.size);

    for (size_t pi = 0; pi < params.size(); ++pi) {
        const auto& p = params[pi];
        for (size_t i = 0; i < p.size; ++i) {
            const double orig = p.data[i];
            p.data[i] = orig + eps;
            const double lp = eval();
            p.data[i] = orig - eps;
            const double lm = eval();
            p.data[i] = orig;
            if (kink_guard && kink_guard(lp, lm, base, eps)) {
                ++rep.skipped;
                continue;
            }
            const double num = (lp - lm) / (2.0 * eps);
            const double ana = analytic[pi][i];
            if (!std::isfinite(num) || !std::isfinite(ana))
                throw std::runtime_error("grad_check: non-finite gradient");
            const double denom = std::max({1.0, std::abs(num), std::abs(ana)});
            rep.max_rel_err = std::max(rep.max_rel_err, std::abs(num - ana) / denom);
            ++rep.checked;
        }
    }
    eval();  // restore gradient state at the unperturbed point
    rep.ok = rep.max_rel_err < tol;
    return rep;
}

}  // namespace czsl
