// SPDX-License-Identifier: Apache-2.0
#include "lightgcl/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "lightgcl/errors.hpp"

namespace lightgcl {

void TrainBatch::index_nodes() {
    std::vector<UserId> users;
    std::vector<ItemId> items;
    users.reserve(triples.size());
    items.reserve(2 * triples.size());
    for (const auto& t : triples) {
        users.push_back(t.user);
        items.push_back(t.pos);
        items.push_back(t.neg);
    }
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    batch_users = std::move(users);
    batch_items = std::move(items);
    cl_keep_users.assign(batch_users.size(), 1);
    cl_keep_items.assign(batch_items.size(), 1);
}

namespace {

std::vector<std::uint32_t> select_kept(std::span<const std::uint32_t> nodes, std::span<const std::uint8_t> mask) {
    if (nodes.size() != mask.size()) throw ConfigError("contrastive mask is not aligned with the batch nodes");
    std::vector<std::uint32_t> kept;
    for (std::size_t k = 0; k < nodes.size(); ++k)
        if (mask[k]) kept.push_back(nodes[k]);
    return kept;
}

// Rows this far below the largest row of their layer are roundoff left over
// from a structurally zero row; their direction is noise, so they count as zero.
constexpr double kNegligibleRow = 1e-10;

double negligible_norm(const Matrix& m) {
    double largest = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) largest = std::max(largest, norm(m.row(r)));
    return kNegligibleRow * largest;
}

// One layer of InfoNCE over `nodes`. When dz/dg are given, adds
// grad_scale * d(loss)/d(z rows) and d(loss)/d(g rows) into them.
double infonce_layer(const Matrix& z, const Matrix& g, std::span<const std::uint32_t> nodes, double tau, Matrix* dz,
                     Matrix* dg, double grad_scale) {
    const std::size_t k = nodes.size();
    if (k == 0) return 0.0;
    const std::size_t d = z.cols();

    Matrix zn(k, d);
    Matrix gn(k, d);
    std::vector<double> z_inv(k, 0.0);
    std::vector<double> g_inv(k, 0.0);
    const double z_floor = negligible_norm(z);
    const double g_floor = negligible_norm(g);
    for (std::size_t a = 0; a < k; ++a) {
        const double nz = norm(z.row(nodes[a]));
        const double ng = norm(g.row(nodes[a]));
        if (nz > z_floor) z_inv[a] = 1.0 / nz;
        if (ng > g_floor) g_inv[a] = 1.0 / ng;
        for (std::size_t j = 0; j < d; ++j) {
            zn(a, j) = z(nodes[a], j) * z_inv[a];
            gn(a, j) = g(nodes[a], j) * g_inv[a];
        }
    }

    Matrix cosine(k, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) cosine(a, b) = dot(zn.row(a), gn.row(b));

    double loss = 0.0;
    // w(a,b) = d(loss)/d(cosine(a,b)) = (softmax_ab - [a==b]) / tau
    Matrix w(k, k);
    for (std::size_t a = 0; a < k; ++a) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < k; ++b) mx = std::max(mx, cosine(a, b) / tau);
        double sum = 0.0;
        for (std::size_t b = 0; b < k; ++b) sum += std::exp(cosine(a, b) / tau - mx);
        const double lse = mx + std::log(sum);
        loss += lse - cosine(a, a) / tau;
        for (std::size_t b = 0; b < k; ++b) w(a, b) = (std::exp(cosine(a, b) / tau - lse) - (a == b ? 1.0 : 0.0)) / tau;
    }

    if (dz != nullptr && dg != nullptr) {
        std::vector<double> acc(d);
        // d cos(x, y) / dx = (y_hat - cos * x_hat) / |x|
        for (std::size_t a = 0; a < k; ++a) {
            if (z_inv[a] == 0.0) continue;
            std::fill(acc.begin(), acc.end(), 0.0);
            double wc = 0.0;
            for (std::size_t b = 0; b < k; ++b) {
                const double wab = w(a, b);
                wc += wab * cosine(a, b);
                for (std::size_t j = 0; j < d; ++j) acc[j] += wab * gn(b, j);
            }
            auto out = dz->row(nodes[a]);
            const double s = grad_scale * z_inv[a];
            for (std::size_t j = 0; j < d; ++j) out[j] += s * (acc[j] - wc * zn(a, j));
        }
        for (std::size_t b = 0; b < k; ++b) {
            if (g_inv[b] == 0.0) continue;
            std::fill(acc.begin(), acc.end(), 0.0);
            double wc = 0.0;
            for (std::size_t a = 0; a < k; ++a) {
                const double wab = w(a, b);
                wc += wab * cosine(a, b);
                for (std::size_t j = 0; j < d; ++j) acc[j] += wab * zn(a, j);
            }
            auto out = dg->row(nodes[b]);
            const double s = grad_scale * g_inv[b];
            for (std::size_t j = 0; j < d; ++j) out[j] += s * (acc[j] - wc * gn(b, j));
        }
    }
    return loss;
}

void check_finite(double v, const char* term) {
    if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + term + " loss");
}

void check_tau(double tau) {
    if (!(tau > 0.0)) throw ConfigError("temperature tau must be positive");
}

void check_triples(const EmbeddingState& state, const TrainBatch& batch) {
    for (const auto& t : batch.triples)
        if (t.user >= state.user_count() || t.pos >= state.item_count() || t.neg >= state.item_count())
            throw ConfigError("batch triple references a node outside the embedding tables");
}

struct Forwarded {
    LossBreakdown loss;
    // Upstream gradients, filled only when requested.
    Matrix de_user, de_item;
    std::vector<Matrix> dz_user, dz_item, dg_user, dg_item;
};

Forwarded compute_loss(const EmbeddingState& state, const TrainBatch& batch, const LossHyper& hyper, bool want_grad) {
    check_tau(hyper.tau);
    check_triples(state, batch);
    const std::size_t layers = state.layers;
    if (state.z_user.size() != layers + 1 || state.e_user.empty()) throw ConfigError("loss: forward pass has not been run");
    const bool use_cl = hyper.lambda1 != 0.0;
    if (use_cl && state.g_user.size() != layers + 1) throw ConfigError("loss: SVD view has not been propagated");

    Forwarded f;
    f.loss.lambda1 = hyper.lambda1;
    f.loss.lambda2 = hyper.lambda2;
    f.loss.tau = hyper.tau;
    const std::size_t d = state.dim;
    if (want_grad) {
        f.de_user = Matrix(state.user_count(), d);
        f.de_item = Matrix(state.item_count(), d);
        f.dz_user.assign(layers + 1, Matrix(state.user_count(), d));
        f.dz_item.assign(layers + 1, Matrix(state.item_count(), d));
        if (use_cl) {
            f.dg_user.assign(layers + 1, Matrix(state.user_count(), d));
            f.dg_item.assign(layers + 1, Matrix(state.item_count(), d));
        }
    }

    // Hinge ranking loss; a margin of exactly 1 takes the zero branch.
    for (const auto& t : batch.triples) {
        const auto eu = state.e_user.row(t.user);
        const auto ep = state.e_item.row(t.pos);
        const auto en = state.e_item.row(t.neg);
        const double violation = 1.0 - dot(eu, ep) + dot(eu, en);
        if (violation <= 0.0) continue;
        f.loss.ranking += violation;
        if (want_grad) {
            auto gu = f.de_user.row(t.user);
            auto gp = f.de_item.row(t.pos);
            auto gn = f.de_item.row(t.neg);
            for (std::size_t j = 0; j < d; ++j) {
                gu[j] += en[j] - ep[j];
                gp[j] -= eu[j];
                gn[j] += eu[j];
            }
        }
    }
    check_finite(f.loss.ranking, "ranking");

    if (use_cl) {
        const auto users = batch.kept_users();
        const auto items = batch.kept_items();
        const std::size_t first = hyper.cl_skip_layer0 ? 1 : 0;
        for (std::size_t l = first; l <= layers; ++l) {
            f.loss.cl_user += infonce_layer(state.z_user[l], state.g_user[l], users, hyper.tau, want_grad ? &f.dz_user[l] : nullptr,
                                            want_grad ? &f.dg_user[l] : nullptr, hyper.lambda1);
            f.loss.cl_item += infonce_layer(state.z_item[l], state.g_item[l], items, hyper.tau, want_grad ? &f.dz_item[l] : nullptr,
                                            want_grad ? &f.dg_item[l] : nullptr, hyper.lambda1);
        }
        check_finite(f.loss.cl_user, "contrastive (user)");
        check_finite(f.loss.cl_item, "contrastive (item)");
    }

    f.loss.reg = l2_reg(state, batch.batch_users, batch.batch_items);
    check_finite(f.loss.reg, "regularisation");
    f.loss.total = f.loss.ranking + hyper.lambda1 * (f.loss.cl_user + f.loss.cl_item) + hyper.lambda2 * f.loss.reg;
    check_finite(f.loss.total, "total");
    return f;
}

}  // namespace

std::vector<UserId> TrainBatch::kept_users() const { return select_kept(batch_users, cl_keep_users); }
std::vector<ItemId> TrainBatch::kept_items() const { return select_kept(batch_items, cl_keep_items); }

double ranking_loss(std::span<const double> scores_pos, std::span<const double> scores_neg) {
    if (scores_pos.size() != scores_neg.size()) throw ConfigError("ranking_loss: positive and negative score counts differ");
    double s = 0.0;
    for (std::size_t k = 0; k < scores_pos.size(); ++k) s += std::max(0.0, 1.0 - scores_pos[k] + scores_neg[k]);
    return s;
}

double infonce(std::span<const Matrix> z_layers, std::span<const Matrix> g_layers, std::span<const std::uint32_t> batch_nodes,
               std::span<const std::uint8_t> cl_mask, double tau, std::size_t first_layer) {
    check_tau(tau);
    if (z_layers.size() != g_layers.size()) throw ConfigError("infonce: view layer counts differ");
    const auto kept = select_kept(batch_nodes, cl_mask);
    double loss = 0.0;
    for (std::size_t l = first_layer; l < z_layers.size(); ++l)
        loss += infonce_layer(z_layers[l], g_layers[l], kept, tau, nullptr, nullptr, 0.0);
    return loss;
}

double l2_reg(const EmbeddingState& state, std::span<const UserId> batch_users, std::span<const ItemId> batch_items) {
    double s = 0.0;
    for (UserId u : batch_users) s += dot(state.user0.row(u), state.user0.row(u));
    for (ItemId i : batch_items) s += dot(state.item0.row(i), state.item0.row(i));
    return s;
}

std::pair<LossBreakdown, GradientSet> loss_and_grad(const EmbeddingState& state, const SparseBipartite& propagation_adj,
                                                    const LowRankFactors& factors, const TrainBatch& batch, const LossHyper& hyper) {
    Forwarded f = compute_loss(state, batch, hyper, true);
    const std::size_t layers = state.layers;
    const bool use_cl = !f.dg_user.empty();

    // e = sum_l z[l]
    for (std::size_t l = 0; l <= layers; ++l) {
        add_scaled(f.dz_user[l], f.de_user);
        add_scaled(f.dz_item[l], f.de_item);
    }
    // Reverse through the layers; dz[l] is complete once layer l+1 is done.
    for (std::size_t l = layers; l >= 1; --l) {
        add_scaled(f.dz_item[l - 1], propagation_adj.multiply_transpose(f.dz_user[l]));
        add_scaled(f.dz_user[l - 1], propagation_adj.multiply(f.dz_item[l]));
        if (use_cl) {
            // g_user[l] = (U S) V^T z_item[l-1]  ->  V (U S)^T dg_user[l]
            add_scaled(f.dz_item[l - 1], matmul(factors.v(), matmul_tn(factors.us(), f.dg_user[l])));
            // g_item[l] = (V S) U^T z_user[l-1]  ->  U (V S)^T dg_item[l]
            add_scaled(f.dz_user[l - 1], matmul(factors.u(), matmul_tn(factors.vs(), f.dg_item[l])));
        }
    }

    GradientSet grad{std::move(f.dz_user[0]), std::move(f.dz_item[0])};
    if (use_cl) {
        add_scaled(grad.user, f.dg_user[0]);
        add_scaled(grad.item, f.dg_item[0]);
    }
    const double r = 2.0 * hyper.lambda2;
    if (r != 0.0) {
        for (UserId u : batch.batch_users) {
            auto g = grad.user.row(u);
            const auto e = state.user0.row(u);
            for (std::size_t j = 0; j < g.size(); ++j) g[j] += r * e[j];
        }
        for (ItemId i : batch.batch_items) {
            auto g = grad.item.row(i);
            const auto e = state.item0.row(i);
            for (std::size_t j = 0; j < g.size(); ++j) g[j] += r * e[j];
        }
    }
    if (!all_finite(grad.user) || !all_finite(grad.item)) throw NumericalError("non-finite gradient");
    return {f.loss, std::move(grad)};
}

LossBreakdown batch_loss(EmbeddingState state, const SparseBipartite& propagation_adj, const LowRankFactors& factors,
                         const TrainBatch& batch, const LossHyper& hyper) {
    propagate_local(state, propagation_adj);
    if (hyper.lambda1 != 0.0) propagate_svd(state, factors);
    return compute_loss(state, batch, hyper, false).loss;
}

FiniteDiffReport finite_diff_check(const EmbeddingState& state, const GradientSet& analytic, const LossFunction& loss,
                                   const FiniteDiffOptions& options) {
    const std::size_t nu = state.user0.size();
    const std::size_t total = nu + state.item0.size();
    std::vector<std::size_t> coords(total);
    std::iota(coords.begin(), coords.end(), 0);
    if (options.coordinates < total) {
        std::mt19937_64 rng(options.seed);
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(options.coordinates);
        std::sort(coords.begin(), coords.end());
    }

    FiniteDiffReport report;
    EmbeddingState probe = state;
    for (std::size_t c : coords) {
        const bool is_user = c < nu;
        double& x = is_user ? probe.user0.values()[c] : probe.item0.values()[c - nu];
        const double a = is_user ? analytic.user.values()[c] : analytic.item.values()[c - nu];
        const double saved = x;
        const double h = options.epsilon;
        auto at = [&](double offset) {
            x = saved + offset;
            return loss(probe);
        };
        // five-point central stencil, O(h^4)
        const double numeric = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
        x = saved;
        const double abs_err = std::abs(a - numeric);
        const double rel_err = abs_err / std::max({std::abs(a), std::abs(numeric), options.abs_floor});
        report.max_abs_error = std::max(report.max_abs_error, abs_err);
        report.max_rel_error = std::max(report.max_rel_error, rel_err);
        ++report.coordinates;
    }
    report.passed = report.max_rel_error < options.tolerance;
    return report;
}

}  // namespace lightgcl
