#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "finforecast/errors.hpp"

namespace finforecast {

/// Dense row-major matrix; vectors are rows x 1.
struct Tensor {
    std::size_t rows = 0, cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
    std::size_t size() const { return v.size(); }
    void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

/// One direction's gate parameters: input weights (H x F), recurrent
/// weights (H x H), and biases (H) for the i/f/o/g gates.
struct LstmParams {
    Tensor Wi, Wf, Wo, Wg;
    Tensor Ui, Uf, Uo, Ug;
    Tensor bi, bf, bo, bg;

    LstmParams() = default;
    LstmParams(std::size_t H, std::size_t F)
        : Wi(H, F), Wf(H, F), Wo(H, F), Wg(H, F),
          Ui(H, H), Uf(H, H), Uo(H, H), Ug(H, H),
          bi(H, 1), bf(H, 1), bo(H, 1), bg(H, 1) {}
};

struct LstmState {
    std::vector<double> h, c;

    explicit LstmState(std::size_t H = 0) : h(H, 0.0), c(H, 0.0) {}
};

enum class Direction { unidirectional, bidirectional };

struct ModelSpec {
    Direction direction = Direction::unidirectional;
    std::size_t hidden = 64;
    std::size_t features = 1;

    std::size_t pooled_dim() const {
        return direction == Direction::bidirectional ? 2 * hidden : hidden;
    }
};

/// Full learnable parameter set: one or two LSTM directions plus the
/// linear regression head (1 x pooled_dim weights, scalar bias).
struct ModelParams {
    ModelSpec spec;
    LstmParams fwd, bwd;
    Tensor head_w, head_b;
};

/// Visits every learnable tensor in a fixed, documented order (the same
/// order the checkpoint format uses).
template <typename P, typename Fn>
void for_each_tensor(P& params, Fn&& fn) {
    auto visit_dir = [&](auto& d) {
        fn(d.Wi); fn(d.Wf); fn(d.Wo); fn(d.Wg);
        fn(d.Ui); fn(d.Uf); fn(d.Uo); fn(d.Ug);
        fn(d.bi); fn(d.bf); fn(d.bo); fn(d.bg);
    };
    visit_dir(params.fwd);
    if (params.spec.direction == Direction::bidirectional) visit_dir(params.bwd);
    fn(params.head_w);
    fn(params.head_b);
}

/// Uniform(-1/sqrt(H), 1/sqrt(H)) weights, zero biases except the forget
/// gate bias, which starts at 1.
inline ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
    ModelParams p;
    p.spec = spec;
    p.fwd = LstmParams(spec.hidden, spec.features);
    if (spec.direction == Direction::bidirectional) p.bwd = LstmParams(spec.hidden, spec.features);
    p.head_w = Tensor(1, spec.pooled_dim());
    p.head_b = Tensor(1, 1);

    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.hidden));
    auto uniform = [&] { return (static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0) * bound; };
    auto fill_dir = [&](LstmParams& d) {
        for (Tensor* t : {&d.Wi, &d.Wf, &d.Wo, &d.Wg, &d.Ui, &d.Uf, &d.Uo, &d.Ug})
            for (double& x : t->v) x = uniform();
        for (double& x : d.bf.v) x = 1.0;
    };
    fill_dir(p.fwd);
    if (spec.direction == Direction::bidirectional) fill_dir(p.bwd);
    for (double& x : p.head_w.v) x = uniform();
    return p;
}

inline ModelParams zeros_like(const ModelParams& params) {
    ModelParams g = params;
    for_each_tensor(g, [](Tensor& t) { t.zero(); });
    return g;
}

namespace detail {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}

/// Per-step activations cached for BPTT.
struct StepCache {
    std::vector<double> x;
    std::vector<double> i, f, o, g;
    std::vector<double> c, tanh_c;
    std::vector<double> h_prev, c_prev;
};

/// i = s(Wi x + Ui h + bi); f, o alike; g = tanh(Wg x + Ug h + bg);
/// c = f*c_prev + i*g; h = o*tanh(c).
inline LstmState cell_forward(std::span<const double> x, const LstmState& prev, const LstmParams& params,
                              StepCache* cache = nullptr) {
    const std::size_t H = params.bi.rows;
    const std::size_t F = params.Wi.cols;
    if (x.size() != F || prev.h.size() != H || prev.c.size() != H)
        throw ShapeMismatch("cell_forward: input/state dimensions do not match parameters");

    LstmState next(H);
    StepCache local;
    StepCache& cc = cache ? *cache : local;
    cc.x.assign(x.begin(), x.end());
    cc.h_prev = prev.h;
    cc.c_prev = prev.c;
    cc.i.resize(H); cc.f.resize(H); cc.o.resize(H); cc.g.resize(H);
    cc.c.resize(H); cc.tanh_c.resize(H);

    for (std::size_t r = 0; r < H; ++r) {
        double ai = params.bi.v[r], af = params.bf.v[r], ao = params.bo.v[r], ag = params.bg.v[r];
        const double* wi = &params.Wi.v[r * F];
        const double* wf = &params.Wf.v[r * F];
        const double* wo = &params.Wo.v[r * F];
        const double* wg = &params.Wg.v[r * F];
        for (std::size_t c = 0; c < F; ++c) {
            ai += wi[c] * x[c];
            af += wf[c] * x[c];
            ao += wo[c] * x[c];
            ag += wg[c] * x[c];
        }
        const double* ui = &params.Ui.v[r * H];
        const double* uf = &params.Uf.v[r * H];
        const double* uo = &params.Uo.v[r * H];
        const double* ug = &params.Ug.v[r * H];
        for (std::size_t c = 0; c < H; ++c) {
            ai += ui[c] * prev.h[c];
            af += uf[c] * prev.h[c];
            ao += uo[c] * prev.h[c];
            ag += ug[c] * prev.h[c];
        }
        const double gi = detail::sigmoid(ai);
        const double gf = detail::sigmoid(af);
        const double go = detail::sigmoid(ao);
        const double gg = std::tanh(ag);
        const double c_new = gf * prev.c[r] + gi * gg;
        const double tc = std::tanh(c_new);
        if (!std::isfinite(c_new)) throw NonFiniteActivation("cell_forward: non-finite cell state");
        next.c[r] = c_new;
        next.h[r] = go * tc;
        cc.i[r] = gi; cc.f[r] = gf; cc.o[r] = go; cc.g[r] = gg;
        cc.c[r] = c_new; cc.tanh_c[r] = tc;
    }
    return next;
}

/// Full forward cache for one window.
struct SequenceCache {
    std::size_t W = 0, F = 0, H = 0;
    Direction direction = Direction::unidirectional;
    std::vector<StepCache> fwd, bwd; // bwd consumes the window reversed
    std::vector<double> pooled;
    double pred = 0.0;
};

/// Runs the window through one or both directions from zero state and
/// pools the final hidden state(s): h_final, or [h_fwd || h_bwd].
inline SequenceCache sequence_forward(std::span<const double> window, const ModelParams& params) {
    const std::size_t F = params.spec.features;
    const std::size_t H = params.spec.hidden;
    if (window.size() % F != 0 || window.empty())
        throw ShapeMismatch("sequence_forward: window size is not a multiple of the feature count");
    const std::size_t W = window.size() / F;

    SequenceCache cache;
    cache.W = W;
    cache.F = F;
    cache.H = H;
    cache.direction = params.spec.direction;
    cache.fwd.resize(W);

    LstmState state(H);
    for (std::size_t t = 0; t < W; ++t)
        state = cell_forward(window.subspan(t * F, F), state, params.fwd, &cache.fwd[t]);
    cache.pooled = state.h;

    if (params.spec.direction == Direction::bidirectional) {
        cache.bwd.resize(W);
        LstmState rstate(H);
        for (std::size_t t = 0; t < W; ++t)
            rstate = cell_forward(window.subspan((W - 1 - t) * F, F), rstate, params.bwd, &cache.bwd[t]);
        cache.pooled.insert(cache.pooled.end(), rstate.h.begin(), rstate.h.end());
    }

    double pred = params.head_b.v[0];
    for (std::size_t j = 0; j < cache.pooled.size(); ++j) pred += params.head_w.v[j] * cache.pooled[j];
    cache.pred = pred;
    return cache;
}

inline double predict(std::span<const double> window, const ModelParams& params) {
    return sequence_forward(window, params).pred;
}

struct BackwardResult {
    ModelParams grads;
    double loss = 0.0;
    double pred = 0.0;
};

namespace detail {

/// BPTT through one direction. `steps[t]` is the cache of the t-th step
/// in processing order; d_final is dL/dh at the last step.
inline void bptt_direction(const std::vector<StepCache>& steps, const LstmParams& params,
                           LstmParams& grads, std::span<const double> d_final) {
    const std::size_t H = params.bi.rows;
    const std::size_t F = params.Wi.cols;
    std::vector<double> dh(d_final.begin(), d_final.end());
    std::vector<double> dc(H, 0.0);
    std::vector<double> dai(H), daf(H), dao(H), dag(H), dh_prev(H);

    for (std::size_t s = steps.size(); s-- > 0;) {
        const StepCache& st = steps[s];
        for (std::size_t r = 0; r < H; ++r) {
            const double one_m_t2 = 1.0 - st.tanh_c[r] * st.tanh_c[r];
            const double dcr = dc[r] + dh[r] * st.o[r] * one_m_t2;
            const double d_o = dh[r] * st.tanh_c[r];
            const double d_i = dcr * st.g[r];
            const double d_g = dcr * st.i[r];
            const double d_f = dcr * st.c_prev[r];
            dai[r] = d_i * st.i[r] * (1.0 - st.i[r]);
            daf[r] = d_f * st.f[r] * (1.0 - st.f[r]);
            dao[r] = d_o * st.o[r] * (1.0 - st.o[r]);
            dag[r] = d_g * (1.0 - st.g[r] * st.g[r]);
            dc[r] = dcr * st.f[r];
        }
        for (std::size_t r = 0; r < H; ++r) {
            double* gwi = &grads.Wi.v[r * F];
            double* gwf = &grads.Wf.v[r * F];
            double* gwo = &grads.Wo.v[r * F];
            double* gwg = &grads.Wg.v[r * F];
            for (std::size_t c = 0; c < F; ++c) {
                gwi[c] += dai[r] * st.x[c];
                gwf[c] += daf[r] * st.x[c];
                gwo[c] += dao[r] * st.x[c];
                gwg[c] += dag[r] * st.x[c];
            }
            double* gui = &grads.Ui.v[r * H];
            double* guf = &grads.Uf.v[r * H];
            double* guo = &grads.Uo.v[r * H];
            double* gug = &grads.Ug.v[r * H];
            for (std::size_t c = 0; c < H; ++c) {
                gui[c] += dai[r] * st.h_prev[c];
                guf[c] += daf[r] * st.h_prev[c];
                guo[c] += dao[r] * st.h_prev[c];
                gug[c] += dag[r] * st.h_prev[c];
            }
            grads.bi.v[r] += dai[r];
            grads.bf.v[r] += daf[r];
            grads.bo.v[r] += dao[r];
            grads.bg.v[r] += dag[r];
        }
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        for (std::size_t r = 0; r < H; ++r) {
            const double* ui = &params.Ui.v[r * H];
            const double* uf = &params.Uf.v[r * H];
            const double* uo = &params.Uo.v[r * H];
            const double* ug = &params.Ug.v[r * H];
            for (std::size_t c = 0; c < H; ++c)
                dh_prev[c] += ui[c] * dai[r] + uf[c] * daf[r] + uo[c] * dao[r] + ug[c] * dag[r];
        }
        dh = dh_prev;
    }
}

} // namespace detail

/// Gradients of L = (pred - target)^2 with respect to every parameter,
/// computed from the cache of the matching forward pass.
inline BackwardResult backward(double target, const ModelParams& params, const SequenceCache& cache) {
    if (cache.H != params.spec.hidden || cache.F != params.spec.features ||
        cache.direction != params.spec.direction ||
        cache.pooled.size() != params.spec.pooled_dim())
        throw StaleCache("backward: cache does not match the supplied parameters");

    BackwardResult res;
    res.grads = zeros_like(params);
    res.pred = cache.pred;
    const double err = cache.pred - target;
    res.loss = err * err;
    const double dpred = 2.0 * err;

    const std::size_t pooled_dim = cache.pooled.size();
    for (std::size_t j = 0; j < pooled_dim; ++j) res.grads.head_w.v[j] = dpred * cache.pooled[j];
    res.grads.head_b.v[0] = dpred;

    std::vector<double> d_pooled(pooled_dim);
    for (std::size_t j = 0; j < pooled_dim; ++j) d_pooled[j] = dpred * params.head_w.v[j];

    const std::size_t H = params.spec.hidden;
    detail::bptt_direction(cache.fwd, params.fwd, res.grads.fwd,
                           std::span<const double>(d_pooled).subspan(0, H));
    if (params.spec.direction == Direction::bidirectional)
        detail::bptt_direction(cache.bwd, params.bwd, res.grads.bwd,
                               std::span<const double>(d_pooled).subspan(H, H));
    return res;
}

// Checkpoint: "FFCP1 <uni|bi> <H> <F>\n" then every tensor in
// for_each_tensor order as raw little-endian doubles.
inline void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << "FFCP1 " << (params.spec.direction == Direction::bidirectional ? "bi" : "uni") << ' '
        << params.spec.hidden << ' ' << params.spec.features << '\n';
    for_each_tensor(const_cast<ModelParams&>(params), [&](const Tensor& t) {
        out.write(reinterpret_cast<const char*>(t.v.data()), static_cast<std::streamsize>(t.size() * 8));
    });
}

inline ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::string magic, dir;
    std::size_t H, F;
    in >> magic >> dir >> H >> F;
    if (magic != "FFCP1" || (dir != "uni" && dir != "bi")) throw Error("bad checkpoint file: " + path);
    in.ignore(1); // newline
    ModelSpec spec{dir == "bi" ? Direction::bidirectional : Direction::unidirectional, H, F};
    ModelParams params = init_params(spec, 0);
    for_each_tensor(params, [&](Tensor& t) {
        in.read(reinterpret_cast<char*>(t.v.data()), static_cast<std::streamsize>(t.size() * 8));
    });
    if (!in) throw Error("truncated checkpoint file: " + path);
    return params;
}

} // namespace finforecast
