#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "orl/rng.hpp"

namespace orl {

class Mlp;

// Per-layer activation and delta storage for one forward/backward pass.
// Callers that run hot loops keep one workspace alive; forward passes with
// distinct workspaces are safe to run concurrently on the same network.
struct MlpWorkspace {
    std::vector<double> activations; // all layers, concatenated
    std::vector<double> deltas;      // widest layer twice, ping-pong
};

// Fully connected network: rectifier hidden layers, linear output. Weights
// start at uniform +-sqrt(6 / fan_in), biases at zero; construction is
// deterministic per seed. Parameters live in one flat buffer, per layer the
// weight matrix (row-major, out x in) followed by the bias vector.
class Mlp {
public:
    Mlp(int input, const std::vector<int>& hidden, int output, std::uint64_t seed)
        : sizes_(build_sizes(input, hidden, output)) {
        init_offsets();
        params_.assign(total_params_, 0.0);
        Rng rng(seed);
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            const int fan_in = sizes_[l];
            const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
            double* w = params_.data() + weight_offsets_[l];
            const std::size_t count = static_cast<std::size_t>(sizes_[l + 1]) * fan_in;
            for (std::size_t i = 0; i < count; ++i) {
                w[i] = rng.uniform(-bound, bound);
            }
            // biases stay zero
        }
    }

    const std::vector<int>& layer_sizes() const { return sizes_; }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }
    std::size_t parameter_count() const { return total_params_; }

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }

    bool same_architecture(const Mlp& other) const { return sizes_ == other.sizes_; }

    void prepare(MlpWorkspace& ws) const {
        std::size_t act_total = 0;
        std::size_t widest = 0;
        for (int s : sizes_) {
            act_total += static_cast<std::size_t>(s);
            widest = std::max(widest, static_cast<std::size_t>(s));
        }
        ws.activations.resize(act_total);
        ws.deltas.resize(2 * widest);
    }

    void forward(std::span<const double> x, std::span<double> out, MlpWorkspace& ws) const {
        if (static_cast<int>(x.size()) != input_size() ||
            static_cast<int>(out.size()) != output_size()) {
            throw std::invalid_argument("dimension mismatch");
        }
        prepare(ws);
        run_forward(x, ws);
        const double* last = ws.activations.data() + activation_offsets_.back();
        std::copy(last, last + output_size(), out.begin());
    }

    std::vector<double> forward(std::span<const double> x) const {
        MlpWorkspace ws;
        std::vector<double> out(static_cast<std::size_t>(output_size()));
        forward(x, out, ws);
        return out;
    }

    // Masked mean-squared-error loss and its gradient, accumulated into
    // `grad` (shaped like the parameters). An empty mask trains every
    // output; the loss divisor is the full output width either way, so a
    // masked sample is exactly the full-vector fit with the unmasked
    // entries' errors zeroed.
    double loss_and_gradient(std::span<const double> x, std::span<const double> target,
                             std::span<const std::uint8_t> mask, std::span<double> grad,
                             MlpWorkspace& ws) const {
        if (static_cast<int>(x.size()) != input_size() ||
            static_cast<int>(target.size()) != output_size()) {
            throw std::invalid_argument("dimension mismatch");
        }
        if (!mask.empty() && mask.size() != target.size()) {
            throw std::invalid_argument("dimension mismatch");
        }
        if (grad.size() != total_params_) {
            throw std::invalid_argument("gradient buffer mismatch");
        }
        for (double v : x) {
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite input");
        }
        for (double v : target) {
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite input");
        }
        prepare(ws);
        run_forward(x, ws);

        const int width = output_size();
        const std::size_t layers = sizes_.size() - 1;
        double* delta = ws.deltas.data();
        double* delta_prev = ws.deltas.data() + ws.deltas.size() / 2;

        const double* out = ws.activations.data() + activation_offsets_.back();
        double loss = 0.0;
        for (int j = 0; j < width; ++j) {
            const bool on = mask.empty() || mask[static_cast<std::size_t>(j)] != 0;
            const double err = on ? out[j] - target[static_cast<std::size_t>(j)] : 0.0;
            loss += err * err;
            delta[j] = 2.0 * err / static_cast<double>(width);
        }
        loss /= static_cast<double>(width);

        for (std::size_t l = layers; l-- > 0;) {
            const int rows = sizes_[l + 1];
            const int cols = sizes_[l];
            const double* below = ws.activations.data() + activation_offsets_[l];
            const double* w = params_.data() + weight_offsets_[l];
            double* gw = grad.data() + weight_offsets_[l];
            double* gb = grad.data() + bias_offsets_[l];

            for (int r = 0; r < rows; ++r) {
                const double d = delta[r];
                if (d != 0.0) {
                    double* gw_row = gw + static_cast<std::size_t>(r) * cols;
                    for (int c = 0; c < cols; ++c) {
                        gw_row[c] += d * below[c];
                    }
                    gb[r] += d;
                }
            }
            if (l == 0) {
                break;
            }
            // delta for the layer below, through the rectifier.
            for (int c = 0; c < cols; ++c) {
                delta_prev[c] = 0.0;
            }
            for (int r = 0; r < rows; ++r) {
                const double d = delta[r];
                if (d != 0.0) {
                    const double* w_row = w + static_cast<std::size_t>(r) * cols;
                    for (int c = 0; c < cols; ++c) {
                        delta_prev[c] += d * w_row[c];
                    }
                }
            }
            for (int c = 0; c < cols; ++c) {
                if (below[c] <= 0.0) {
                    delta_prev[c] = 0.0;
                }
            }
            std::swap(delta, delta_prev);
        }
        return loss;
    }

    void save(std::ostream& out) const {
        out.write("ORLN1", 5);
        write_u32(out, static_cast<std::uint32_t>(sizes_.size()));
        for (int s : sizes_) {
            write_u32(out, static_cast<std::uint32_t>(s));
        }
        for (double p : params_) {
            write_f64(out, p);
        }
        if (!out) {
            throw std::runtime_error("network serialization failed");
        }
    }

    static Mlp load(std::istream& in) {
        char magic[5];
        in.read(magic, 5);
        if (!in || std::memcmp(magic, "ORLN1", 5) != 0) {
            throw std::runtime_error("bad network record magic");
        }
        const std::uint32_t count = read_u32(in);
        if (count < 2 || count > 64) {
            throw std::runtime_error("bad network record layer count");
        }
        std::vector<int> sizes;
        for (std::uint32_t i = 0; i < count; ++i) {
            const std::uint32_t s = read_u32(in);
            if (s < 1 || s > (1u << 20)) {
                throw std::runtime_error("bad network record layer size");
            }
            sizes.push_back(static_cast<int>(s));
        }
        std::vector<int> hidden(sizes.begin() + 1, sizes.end() - 1);
        Mlp net(sizes.front(), hidden, sizes.back(), 0);
        for (double& p : net.params_) {
            p = read_f64(in);
        }
        if (!in) {
            throw std::runtime_error("truncated network record");
        }
        return net;
    }

private:
    static std::vector<int> build_sizes(int input, const std::vector<int>& hidden, int output) {
        if (input < 1 || output < 1) {
            throw std::invalid_argument("layer sizes must be positive");
        }
        std::vector<int> sizes;
        sizes.push_back(input);
        for (int h : hidden) {
            if (h < 1) {
                throw std::invalid_argument("layer sizes must be positive");
            }
            sizes.push_back(h);
        }
        sizes.push_back(output);
        return sizes;
    }

    void init_offsets() {
        weight_offsets_.clear();
        bias_offsets_.clear();
        activation_offsets_.clear();
        std::size_t p = 0;
        std::size_t a = 0;
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            weight_offsets_.push_back(p);
            p += static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l];
            bias_offsets_.push_back(p);
            p += static_cast<std::size_t>(sizes_[l + 1]);
        }
        for (std::size_t l = 0; l < sizes_.size(); ++l) {
            activation_offsets_.push_back(a);
            a += static_cast<std::size_t>(sizes_[l]);
        }
        total_params_ = p;
    }

    // Dot products run over eight lanes so the reduction vectorizes and
    // keeps the FMA pipes busy without reassociation flags.
    static double dot(const double* a, const double* b, int n) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        double s4 = 0.0, s5 = 0.0, s6 = 0.0, s7 = 0.0;
        int c = 0;
        for (; c + 8 <= n; c += 8) {
            s0 += a[c] * b[c];
            s1 += a[c + 1] * b[c + 1];
            s2 += a[c + 2] * b[c + 2];
            s3 += a[c + 3] * b[c + 3];
            s4 += a[c + 4] * b[c + 4];
            s5 += a[c + 5] * b[c + 5];
            s6 += a[c + 6] * b[c + 6];
            s7 += a[c + 7] * b[c + 7];
        }
        for (; c < n; ++c) {
            s0 += a[c] * b[c];
        }
        return ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7));
    }

    void run_forward(std::span<const double> x, MlpWorkspace& ws) const {
        std::copy(x.begin(), x.end(), ws.activations.begin());
        const std::size_t layers = sizes_.size() - 1;
        for (std::size_t l = 0; l < layers; ++l) {
            const int rows = sizes_[l + 1];
            const int cols = sizes_[l];
            const double* in = ws.activations.data() + activation_offsets_[l];
            double* out = ws.activations.data() + activation_offsets_[l + 1];
            const double* w = params_.data() + weight_offsets_[l];
            const double* b = params_.data() + bias_offsets_[l];
            const bool rectify = l + 1 < layers;
            for (int r = 0; r < rows; ++r) {
                const double acc = b[r] + dot(w + static_cast<std::size_t>(r) * cols, in, cols);
                out[r] = rectify && acc < 0.0 ? 0.0 : acc;
            }
        }
    }

    static void write_u32(std::ostream& out, std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
        out.write(reinterpret_cast<const char*>(b), 4);
    }

    static std::uint32_t read_u32(std::istream& in) {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }

    static void write_f64(std::ostream& out, double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) {
            b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
        }
        out.write(reinterpret_cast<const char*>(b), 8);
    }

    static double read_f64(std::istream& in) {
        unsigned char b[8];
        in.read(reinterpret_cast<char*>(b), 8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) {
            bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        }
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    std::vector<int> sizes_;
    std::vector<std::size_t> weight_offsets_;
    std::vector<std::size_t> bias_offsets_;
    std::vector<std::size_t> activation_offsets_;
    std::size_t total_params_ = 0;
    std::vector<double> params_;
};

// First/second moment state for Adam with bias correction.
struct AdamState {
    explicit AdamState(const Mlp& net, double learning_rate)
        : lr(learning_rate),
          m(net.parameter_count(), 0.0),
          v(net.parameter_count(), 0.0) {}

    double lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step_count = 0;
    std::vector<double> m;
    std::vector<double> v;
};

inline void adam_step(Mlp& net, std::span<const double> grad, AdamState& state) {
    auto params = net.parameters();
    if (grad.size() != params.size() || state.m.size() != params.size()) {
        throw std::invalid_argument("gradient buffer mismatch");
    }
    ++state.step_count;
    const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / correction1;
        const double v_hat = state.v[i] / correction2;
        params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

// One gradient step on a single sample; returns the pre-step loss.
inline double fit(Mlp& net, std::span<const double> x, std::span<const double> target,
                  std::span<const std::uint8_t> mask, AdamState& adam) {
    std::vector<double> grad(net.parameter_count(), 0.0);
    MlpWorkspace ws;
    const double loss = net.loss_and_gradient(x, target, mask, grad, ws);
    adam_step(net, grad, adam);
    return loss;
}

inline void copy_parameters(const Mlp& src, Mlp& dst) {
    if (!src.same_architecture(dst)) {
        throw std::invalid_argument("architecture mismatch");
    }
    auto from = src.parameters();
    std::copy(from.begin(), from.end(), dst.parameters().begin());
}

inline bool parameters_finite(const Mlp& net) {
    for (double p : net.parameters()) {
        if (!std::isfinite(p)) {
            return false;
        }
    }
    return true;
}

// Maximum relative disagreement between the analytic gradient and central
// finite differences. Meant for small networks.
inline double gradient_check(const Mlp& net, std::span<const double> x,
                             std::span<const double> target, double step = 1e-5) {
    Mlp probe = net;
    MlpWorkspace ws;
    std::vector<double> analytic(probe.parameter_count(), 0.0);
    probe.loss_and_gradient(x, target, {}, analytic, ws);

    auto loss_at = [&]() {
        std::vector<double> out(static_cast<std::size_t>(probe.output_size()));
        probe.forward(x, out, ws);
        double loss = 0.0;
        for (std::size_t j = 0; j < out.size(); ++j) {
            const double err = out[j] - target[j];
            loss += err * err;
        }
        return loss / static_cast<double>(out.size());
    };

    double worst = 0.0;
    auto params = probe.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + step;
        const double hi = loss_at();
        params[i] = saved - step;
        const double lo = loss_at();
        params[i] = saved;
        const double numeric = (hi - lo) / (2.0 * step);
        const double denom = std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-8);
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

} // namespace orl
