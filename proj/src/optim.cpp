#include "lumisplit/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace lumisplit {

VarGroup VarGroup::make(std::string name, std::vector<double> values, double lr) {
    VarGroup g;
    g.name = std::move(name);
    g.m.assign(values.size(), 0.0);
    g.v.assign(values.size(), 0.0);
    g.values = std::move(values);
    g.lr = lr;
    return g;
}

void adam_step(VarGroup& group, const std::vector<double>& grad, const AdamParams& p) {
    if (group.frozen) throw std::logic_error("adam_step: group '" + group.name + "' is frozen");
    if (grad.size() != group.values.size())
        throw std::invalid_argument("adam_step: gradient length mismatch for '" + group.name + "'");
    for (double g : grad)
        if (!std::isfinite(g))
            throw std::runtime_error("adam_step: non-finite gradient in group '" + group.name + "'");
    group.step_count += 1;
    double bc1 = 1.0 - std::pow(p.beta1, group.step_count);
    double bc2 = 1.0 - std::pow(p.beta2, group.step_count);
    for (size_t i = 0; i < grad.size(); ++i) {
        group.m[i] = p.beta1 * group.m[i] + (1.0 - p.beta1) * grad[i];
        group.v[i] = p.beta2 * group.v[i] + (1.0 - p.beta2) * grad[i] * grad[i];
        double mhat = group.m[i] / bc1;
        double vhat = group.v[i] / bc2;
        group.values[i] -= group.lr * mhat / (std::sqrt(vhat) + p.eps);
    }
}

void clamp_unit_interval(std::vector<double>& values, size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) values[i] = clamp01(values[i]);
}

void clamp_range(std::vector<double>& values, size_t begin, size_t end, double lo, double hi) {
    for (size_t i = begin; i < end; ++i)
        values[i] = values[i] < lo ? lo : (values[i] > hi ? hi : values[i]);
}

void renormalize_axis_angle(double* w) {
    double n = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    if (n >= M_PI) {
        // wrap the angle into (-pi, pi] keeping the rotation identical
        double wrapped = std::fmod(n, 2.0 * M_PI);
        if (wrapped > M_PI) wrapped -= 2.0 * M_PI;
        double s = wrapped / n;
        w[0] *= s;
        w[1] *= s;
        w[2] *= s;
    }
}

}  // namespace lumisplit
