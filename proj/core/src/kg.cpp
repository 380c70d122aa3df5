#include "renki/kg.hpp"

#include <cmath>
#include <string>

#include "renki/errors.hpp"

namespace renki {

double apply_transform(OutputTransform t, double s) {
    if (t == OutputTransform::Identity) return s;
    // numerically stable logistic
    if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

double transform_derivative(OutputTransform t, double s) {
    if (t == OutputTransform::Identity) return 1.0;
    const double p = apply_transform(OutputTransform::Logistic, s);
    return p * (1.0 - p);
}

int relation_count(const ScoreModel& model) {
    return std::visit(
        [](const auto& m) -> int {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, CnkgModel>)
                return static_cast<int>(m.nets.size());
            else if constexpr (std::is_same_v<T, IpNkgModel>)
                return static_cast<int>(m.head_nets.size());
            else if constexpr (std::is_same_v<T, TranseModel>)
                return static_cast<int>(m.relation_vectors.rows());
            else if constexpr (std::is_same_v<T, MipModel>)
                return static_cast<int>(m.relation_diagonals.rows());
            else
                return static_cast<int>(m.relation_vectors.rows());
        },
        model);
}

std::size_t parameter_count(const ScoreModel& model) {
    return std::visit(
        [](const auto& m) -> std::size_t {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, CnkgModel>) {
                std::size_t n = 0;
                for (const auto& net : m.nets) n += net.parameter_count();
                return n;
            } else if constexpr (std::is_same_v<T, IpNkgModel>) {
                std::size_t n = 0;
                for (const auto& net : m.head_nets) n += net.parameter_count();
                for (const auto& net : m.tail_nets) n += net.parameter_count();
                return n;
            } else if constexpr (std::is_same_v<T, MipModel>) {
                return m.relation_diagonals.size() + 1;
            } else {
                return m.relation_vectors.size();
            }
        },
        model);
}

void validate(const ScoreModel& model, const EmbeddingTable& emb) {
    const std::size_t d = emb.dim();
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, CnkgModel>) {
                for (const auto& net : m.nets) {
                    validate(net);
                    if (net.input_dim() != 2 * d || net.output_dim() != 1)
                        throw ShapeError("concat network must map 2D -> 1");
                }
            } else if constexpr (std::is_same_v<T, IpNkgModel>) {
                if (m.head_nets.size() != m.tail_nets.size())
                    throw ShapeError("head/tail network counts differ");
                for (std::size_t k = 0; k < m.head_nets.size(); ++k) {
                    validate(m.head_nets[k]);
                    validate(m.tail_nets[k]);
                    if (m.head_nets[k].input_dim() != d || m.tail_nets[k].input_dim() != d)
                        throw ShapeError("inner-product networks must take D inputs");
                    if (m.head_nets[k].output_dim() != m.tail_nets[k].output_dim())
                        throw ShapeError("inner-product network output dims differ");
                }
            } else if constexpr (std::is_same_v<T, TranseModel>) {
                if (m.relation_vectors.cols() != d)
                    throw ShapeError("translation vectors must have dimension D");
            } else if constexpr (std::is_same_v<T, MipModel>) {
                if (m.relation_diagonals.cols() != d)
                    throw ShapeError("diagonal vectors must have dimension D");
            } else {
                if (m.relation_vectors.cols() != 2 * d)
                    throw ShapeError("concat-linear vectors must have dimension 2D");
            }
        },
        model);
}

CnkgModel make_cnkg(int relations, std::size_t dim, std::span<const std::size_t> hidden, Rng& rng,
                    OutputTransform rho) {
    CnkgModel m;
    m.rho = rho;
    std::vector<std::size_t> dims;
    dims.push_back(2 * dim);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(1);
    for (int k = 0; k < relations; ++k) m.nets.push_back(make_ffn(dims, rng));
    return m;
}

IpNkgModel make_ipnkg(int relations, std::size_t dim, std::size_t out_dim,
                      std::span<const std::size_t> hidden, Rng& rng, OutputTransform rho) {
    IpNkgModel m;
    m.rho = rho;
    std::vector<std::size_t> dims;
    dims.push_back(dim);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out_dim == 0 ? dim : out_dim);
    for (int k = 0; k < relations; ++k) {
        m.head_nets.push_back(make_ffn(dims, rng));
        m.tail_nets.push_back(make_ffn(dims, rng));
    }
    return m;
}

TranseModel make_transe(int relations, std::size_t dim, Rng& rng) {
    TranseModel m;
    m.relation_vectors = Matrix(relations, dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::size_t i = 0; i < m.relation_vectors.rows(); ++i)
        for (std::size_t j = 0; j < dim; ++j) m.relation_vectors(i, j) = scale * rng.normal();
    return m;
}

MipModel make_mip(int relations, std::size_t dim, Rng& rng, double bias) {
    MipModel m;
    m.relation_diagonals = Matrix(relations, dim);
    for (std::size_t i = 0; i < m.relation_diagonals.rows(); ++i)
        for (std::size_t j = 0; j < dim; ++j) m.relation_diagonals(i, j) = rng.normal();
    m.bias = bias;
    return m;
}

ConcatLinearModel make_concat_linear(int relations, std::size_t dim, Rng& rng) {
    ConcatLinearModel m;
    m.relation_vectors = Matrix(relations, 2 * dim);
    for (std::size_t i = 0; i < m.relation_vectors.rows(); ++i)
        for (std::size_t j = 0; j < 2 * dim; ++j) m.relation_vectors(i, j) = rng.normal();
    return m;
}

namespace {

void check_indices(const ScoreModel& model, const EmbeddingTable& emb, const Triple& x) {
    const auto n = static_cast<std::int64_t>(emb.count());
    const auto k = static_cast<std::int64_t>(relation_count(model));
    if (x.head < 0 || x.head >= n || x.tail < 0 || x.tail >= n)
        throw DataError("entity index out of bounds: (" + std::to_string(x.head) + ", " +
                        std::to_string(x.relation) + ", " + std::to_string(x.tail) + ")");
    if (x.relation < 0 || x.relation >= k)
        throw DataError("relation index out of bounds: " + std::to_string(x.relation));
}

std::vector<double> concat_rows(std::span<const double> a, std::span<const double> b) {
    std::vector<double> v;
    v.reserve(a.size() + b.size());
    v.insert(v.end(), a.begin(), a.end());
    v.insert(v.end(), b.begin(), b.end());
    return v;
}

// Relation-parameter sinks for gradient accumulation; exactly one group of
// pointers is set depending on the model variant.
struct RelSink {
    GradientTape* tape = nullptr;       // CnkgModel
    GradientTape* head_tape = nullptr;  // IpNkgModel
    GradientTape* tail_tape = nullptr;
    std::span<double> vec;    // TransE / Mip diagonal / ConcatLinear row
    double* scalar = nullptr;  // Mip bias
};

// Adds the gradients of upstream * score(x) into head_add / tail_add and the
// relation sink. head_add and tail_add may alias the same storage (when
// head == tail); every write below is an accumulation so the sum stays
// correct in that case.
void add_score_gradients(const ScoreModel& model, const EmbeddingTable& emb, const Triple& x,
                         double upstream, std::span<double> head_add, std::span<double> tail_add,
                         RelSink sink) {
    const auto zh = emb.vectors.row(static_cast<std::size_t>(x.head));
    const auto zt = emb.vectors.row(static_cast<std::size_t>(x.tail));
    const auto r = static_cast<std::size_t>(x.relation);
    const std::size_t d = emb.dim();

    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, CnkgModel>) {
                const auto& net = m.nets[r];
                const auto in = concat_rows(zh, zt);
                const ForwardTrace trace = ffn_forward_trace(net, in);
                const double up = upstream * transform_derivative(m.rho, trace.output()[0]);
                const double u[1] = {up};
                std::vector<double> input_grad(2 * d, 0.0);
                ffn_backward_accumulate(net, trace, u, *sink.tape, input_grad);
                for (std::size_t j = 0; j < d; ++j) {
                    head_add[j] += input_grad[j];
                    tail_add[j] += input_grad[d + j];
                }
            } else if constexpr (std::is_same_v<T, IpNkgModel>) {
                const auto& hn = m.head_nets[r];
                const auto& tn = m.tail_nets[r];
                const ForwardTrace ht = ffn_forward_trace(hn, zh);
                const ForwardTrace tt = ffn_forward_trace(tn, zt);
                const auto a = ht.output();
                const auto b = tt.output();
                const double up = upstream * transform_derivative(m.rho, dot(a, b));
                std::vector<double> ua(b.begin(), b.end()), ub(a.begin(), a.end());
                for (auto& v : ua) v *= up;
                for (auto& v : ub) v *= up;
                std::vector<double> hg(d, 0.0), tg(d, 0.0);
                ffn_backward_accumulate(hn, ht, ua, *sink.head_tape, hg);
                ffn_backward_accumulate(tn, tt, ub, *sink.tail_tape, tg);
                for (std::size_t j = 0; j < d; ++j) {
                    head_add[j] += hg[j];
                    tail_add[j] += tg[j];
                }
            } else if constexpr (std::is_same_v<T, TranseModel>) {
                const auto v = m.relation_vectors.row(r);
                for (std::size_t j = 0; j < d; ++j) {
                    const double gj = -2.0 * upstream * (zh[j] - zt[j] + v[j]);
                    head_add[j] += gj;
                    tail_add[j] -= gj;
                    sink.vec[j] += gj;
                }
            } else if constexpr (std::is_same_v<T, MipModel>) {
                const auto v = m.relation_diagonals.row(r);
                double s = m.bias;
                for (std::size_t j = 0; j < d; ++j) s += v[j] * zh[j] * zt[j];
                const double up = upstream * transform_derivative(OutputTransform::Logistic, s);
                for (std::size_t j = 0; j < d; ++j) {
                    head_add[j] += up * v[j] * zt[j];
                    tail_add[j] += up * v[j] * zh[j];
                    sink.vec[j] += up * zh[j] * zt[j];
                }
                *sink.scalar += up;
            } else {
                const auto v = m.relation_vectors.row(r);
                for (std::size_t j = 0; j < d; ++j) {
                    head_add[j] += upstream * v[j];
                    tail_add[j] += upstream * v[d + j];
                    sink.vec[j] += upstream * zh[j];
                    sink.vec[d + j] += upstream * zt[j];
                }
            }
        },
        model);
}

}  // namespace

double score(const ScoreModel& model, const EmbeddingTable& emb, const Triple& x) {
    check_indices(model, emb, x);
    const auto zh = emb.vectors.row(static_cast<std::size_t>(x.head));
    const auto zt = emb.vectors.row(static_cast<std::size_t>(x.tail));
    const auto r = static_cast<std::size_t>(x.relation);
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, CnkgModel>) {
                const auto in = concat_rows(zh, zt);
                return apply_transform(m.rho, ffn_forward(m.nets[r], in)[0]);
            } else if constexpr (std::is_same_v<T, IpNkgModel>) {
                const auto a = ffn_forward(m.head_nets[r], zh);
                const auto b = ffn_forward(m.tail_nets[r], zt);
                return apply_transform(m.rho, dot(a, b));
            } else if constexpr (std::is_same_v<T, TranseModel>) {
                const auto v = m.relation_vectors.row(r);
                double s = 0.0;
                for (std::size_t j = 0; j < v.size(); ++j) {
                    const double u = zh[j] - zt[j] + v[j];
                    s += u * u;
                }
                return -s;
            } else if constexpr (std::is_same_v<T, MipModel>) {
                const auto v = m.relation_diagonals.row(r);
                double s = m.bias;
                for (std::size_t j = 0; j < v.size(); ++j) s += v[j] * zh[j] * zt[j];
                return apply_transform(OutputTransform::Logistic, s);
            } else {
                const auto v = m.relation_vectors.row(r);
                const std::size_t d = zh.size();
                double s = 0.0;
                for (std::size_t j = 0; j < d; ++j) s += v[j] * zh[j] + v[d + j] * zt[j];
                return s;
            }
        },
        model);
}

std::vector<double> batch_score(const ScoreModel& model, const EmbeddingTable& emb,
                                std::span<const Triple> triples) {
    std::vector<double> out;
    out.reserve(triples.size());
    for (const auto& x : triples) out.push_back(score(model, emb, x));
    return out;
}

ScoreGradients score_gradients(const ScoreModel& model, const EmbeddingTable& emb, const Triple& x,
                               double upstream) {
    check_indices(model, emb, x);
    const std::size_t d = emb.dim();

    ScoreGradients g;
    g.relation = x.relation;
    g.head.assign(d, 0.0);
    g.tail.assign(d, 0.0);

    RelSink sink;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, CnkgModel>) {
                CnkgGrad cg{make_tape(m.nets[static_cast<std::size_t>(x.relation)])};
                g.relation_grad = std::move(cg);
                sink.tape = &std::get<CnkgGrad>(g.relation_grad).net;
            } else if constexpr (std::is_same_v<T, IpNkgModel>) {
                IpNkgGrad ig{make_tape(m.head_nets[static_cast<std::size_t>(x.relation)]),
                             make_tape(m.tail_nets[static_cast<std::size_t>(x.relation)])};
                g.relation_grad = std::move(ig);
                sink.head_tape = &std::get<IpNkgGrad>(g.relation_grad).head_net;
                sink.tail_tape = &std::get<IpNkgGrad>(g.relation_grad).tail_net;
            } else if constexpr (std::is_same_v<T, TranseModel>) {
                g.relation_grad = TranseGrad{std::vector<double>(d, 0.0)};
                sink.vec = std::get<TranseGrad>(g.relation_grad).relation_vector;
            } else if constexpr (std::is_same_v<T, MipModel>) {
                g.relation_grad = MipGrad{std::vector<double>(d, 0.0), 0.0};
                auto& mg = std::get<MipGrad>(g.relation_grad);
                sink.vec = mg.diagonal;
                sink.scalar = &mg.bias;
            } else {
                g.relation_grad = ConcatLinearGrad{std::vector<double>(2 * d, 0.0)};
                sink.vec = std::get<ConcatLinearGrad>(g.relation_grad).relation_vector;
            }
        },
        model);

    add_score_gradients(model, emb, x, upstream, g.head, g.tail, sink);
    return g;
}

ModelGrads make_grads(const ScoreModel& model, const EmbeddingTable& emb) {
    ModelGrads g;
    g.emb = Matrix(emb.count(), emb.dim());
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, CnkgModel>) {
                for (const auto& net : m.nets) g.tapes.push_back(make_tape(net));
            } else if constexpr (std::is_same_v<T, IpNkgModel>) {
                for (const auto& net : m.head_nets) g.tapes.push_back(make_tape(net));
                for (const auto& net : m.tail_nets) g.tapes.push_back(make_tape(net));
            } else if constexpr (std::is_same_v<T, TranseModel>) {
                g.vectors = Matrix(m.relation_vectors.rows(), m.relation_vectors.cols());
            } else if constexpr (std::is_same_v<T, MipModel>) {
                g.vectors = Matrix(m.relation_diagonals.rows(), m.relation_diagonals.cols());
            } else {
                g.vectors = Matrix(m.relation_vectors.rows(), m.relation_vectors.cols());
            }
        },
        model);
    return g;
}

void zero(ModelGrads& grads) {
    grads.emb.fill(0.0);
    for (auto& t : grads.tapes) zero(t);
    grads.vectors.fill(0.0);
    grads.scalar = 0.0;
}

void accumulate_score_gradients(const ScoreModel& model, const EmbeddingTable& emb,
                                const Triple& x, double upstream, ModelGrads& grads) {
    check_indices(model, emb, x);
    const auto r = static_cast<std::size_t>(x.relation);
    RelSink sink;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            (void)m;
            if constexpr (std::is_same_v<T, CnkgModel>) {
                sink.tape = &grads.tapes[r];
            } else if constexpr (std::is_same_v<T, IpNkgModel>) {
                sink.head_tape = &grads.tapes[r];
                sink.tail_tape = &grads.tapes[m.head_nets.size() + r];
            } else if constexpr (std::is_same_v<T, MipModel>) {
                sink.vec = grads.vectors.row(r);
                sink.scalar = &grads.scalar;
            } else if constexpr (!std::is_same_v<T, CnkgModel>) {
                sink.vec = grads.vectors.row(r);
            }
        },
        model);
    add_score_gradients(model, emb, x, upstream,
                        grads.emb.row(static_cast<std::size_t>(x.head)),
                        grads.emb.row(static_cast<std::size_t>(x.tail)), sink);
}

}  // namespace renki
