#include "stin/rate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stin {

const char* to_string(Mode m) { return m == Mode::Coordinated ? "coordinated" : "cooperative"; }

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::Rsma: return "rsma";
        case Strategy::Sdma: return "sdma";
        case Strategy::Noma: return "noma";
    }
    return "?";
}

double rate_bps(double sinr) { return std::log1p(std::max(sinr, 0.0)) / M_LN2; }

BeamformerSet BeamformerSet::coordinated(MatrixXcd w, MatrixXcd p) {
    BeamformerSet bf;
    bf.mode = Mode::Coordinated;
    bf.W = std::move(w);
    bf.P = std::move(p);
    return bf;
}

BeamformerSet BeamformerSet::cooperative(MatrixXcd v, int n_s, int n_t) {
    if (v.rows() != n_s + n_t) throw std::invalid_argument("cooperative V: bad row count");
    BeamformerSet bf;
    bf.mode = Mode::Cooperative;
    bf.V = std::move(v);
    return bf;
}

double BeamformerSet::power_violation(double p_s, double p_t, int n_s) const {
    double worst = 0.0;
    const auto rel = [](double used, double budget) {
        return budget > 0 ? (used - budget) / budget : used;
    };
    if (mode == Mode::Coordinated) {
        for (int n = 0; n < W.rows(); ++n)
            worst = std::max(worst, rel(W.row(n).squaredNorm(), p_s / W.rows()));
        if (P.size() > 0) worst = std::max(worst, rel(P.squaredNorm(), p_t));
    } else {
        for (int n = 0; n < n_s; ++n)
            worst = std::max(worst, rel(V.row(n).squaredNorm(), p_s / n_s));
        worst = std::max(worst, rel(V.bottomRows(V.rows() - n_s).squaredNorm(), p_t));
    }
    return worst;
}

CommonRatePortions CommonRatePortions::zeros(int n_s, int k_t) {
    return {VectorXd::Zero(n_s), VectorXd::Zero(k_t)};
}

SinrTables coordinated_sinrs(const ChannelSet& ch, const BeamformerSet& bf,
                             const VectorXd& sigma2_su, const VectorXd& sigma2_cu) {
    if (bf.mode != Mode::Coordinated) throw std::invalid_argument("coordinated_sinrs: wrong mode");
    const int n_s = ch.num_beams(), k_s = ch.num_sus(), k_t = ch.num_cus();
    SinrTables t;
    t.su_common.resize(k_s);
    t.su_private.resize(k_s);
    t.cu_common.resize(k_t);
    t.cu_private.resize(k_t);
    for (int k = 0; k < k_s; ++k) {
        const VectorXcd fw = bf.W.adjoint() * ch.F.col(k); // [w_c, w_1..w_Ns]^H f
        double priv_all = 0.0;
        for (int i = 1; i <= n_s; ++i) priv_all += std::norm(fw(i));
        const int own = 1 + ch.group_map[k];
        t.su_common(k) = std::norm(fw(0)) / (priv_all + sigma2_su(k));
        t.su_private(k) = std::norm(fw(own)) / (priv_all - std::norm(fw(own)) + sigma2_su(k));
    }
    for (int k = 0; k < k_t; ++k) {
        double sat_intf = 0.0;
        if (bf.W.size() > 0) sat_intf = (bf.W.adjoint() * ch.Z.col(k)).squaredNorm();
        const VectorXcd hp = bf.P.adjoint() * ch.H.col(k);
        double priv_all = 0.0;
        for (int j = 1; j <= k_t; ++j) priv_all += std::norm(hp(j));
        t.cu_common(k) = std::norm(hp(0)) / (priv_all + sat_intf + sigma2_cu(k));
        t.cu_private(k) = std::norm(hp(k + 1)) / (priv_all - std::norm(hp(k + 1)) + sat_intf + sigma2_cu(k));
    }
    return t;
}

SinrTables cooperative_sinrs(const ChannelSet& ch, const BeamformerSet& bf,
                             const VectorXd& sigma2_su, const VectorXd& sigma2_cu) {
    if (bf.mode != Mode::Cooperative) throw std::invalid_argument("cooperative_sinrs: wrong mode");
    const int n_s = ch.num_beams(), k_s = ch.num_sus(), k_t = ch.num_cus();
    const int n_t = ch.num_bs_antennas();
    SinrTables t;
    t.su_common.resize(k_s);
    t.su_private.resize(k_s);
    t.cu_common.resize(k_t);
    t.cu_private.resize(k_t);
    for (int k = 0; k < k_s; ++k) {
        // SUs are out of BS coverage: effective channel is [f; 0].
        const VectorXcd fv = bf.V.topRows(n_s).adjoint() * ch.F.col(k);
        double all_priv = 0.0;
        for (int i = 1; i < fv.size(); ++i) all_priv += std::norm(fv(i));
        const int own = 1 + ch.group_map[k];
        t.su_common(k) = std::norm(fv(0)) / (all_priv + sigma2_su(k));
        t.su_private(k) = std::norm(fv(own)) / (all_priv - std::norm(fv(own)) + sigma2_su(k));
    }
    for (int k = 0; k < k_t; ++k) {
        VectorXcd g(n_s + n_t);
        g << ch.Z.col(k), ch.H.col(k);
        const VectorXcd gv = bf.V.adjoint() * g;
        double all_priv = 0.0;
        for (int i = 1; i < gv.size(); ++i) all_priv += std::norm(gv(i));
        const int own = 1 + n_s + k;
        t.cu_common(k) = std::norm(gv(0)) / (all_priv + sigma2_cu(k));
        t.cu_private(k) = std::norm(gv(own)) / (all_priv - std::norm(gv(own)) + sigma2_cu(k));
    }
    return t;
}

RateVector rsma_rates(const SinrTables& sinrs, const CommonRatePortions& portions,
                      const std::vector<int>& group_map, Mode mode) {
    const int n_s = static_cast<int>(portions.c_sat.size());
    const int k_t = static_cast<int>(portions.c_bs.size());
    if ((portions.c_sat.size() && portions.c_sat.minCoeff() < 0) ||
        (portions.c_bs.size() && portions.c_bs.minCoeff() < 0))
        throw std::invalid_argument("rsma_rates: negative common-rate portion");
    RateVector rv;
    rv.sinrs = sinrs;
    rv.beam_totals = VectorXd::Zero(n_s);
    rv.cu_totals = VectorXd::Zero(k_t);

    VectorXd beam_private = VectorXd::Constant(n_s, std::numeric_limits<double>::infinity());
    double su_common_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < sinrs.su_private.size(); ++k) {
        const int n = group_map[k];
        beam_private(n) = std::min(beam_private(n), rate_bps(sinrs.su_private(k)));
        su_common_min = std::min(su_common_min, rate_bps(sinrs.su_common(k)));
    }
    double cu_common_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < k_t; ++k) cu_common_min = std::min(cu_common_min, rate_bps(sinrs.cu_common(k)));

    for (int n = 0; n < n_s; ++n) rv.beam_totals(n) = portions.c_sat(n) + beam_private(n);
    for (int k = 0; k < k_t; ++k) rv.cu_totals(k) = portions.c_bs(k) + rate_bps(sinrs.cu_private(k));

    constexpr double kTol = 1e-6;
    if (mode == Mode::Coordinated) {
        rv.sat_common_slack = n_s > 0 ? su_common_min - portions.c_sat.sum() : 0.0;
        rv.bs_common_slack = k_t > 0 ? cu_common_min - portions.c_bs.sum() : 0.0;
        rv.portions_feasible = rv.sat_common_slack >= -kTol && rv.bs_common_slack >= -kTol;
    } else {
        // One super common stream decoded by every user in the system.
        const double budget = std::min(su_common_min, cu_common_min);
        rv.sat_common_slack = budget - (portions.c_sat.sum() + portions.c_bs.sum());
        rv.bs_common_slack = rv.sat_common_slack;
        rv.portions_feasible = rv.sat_common_slack >= -kTol;
    }
    return rv;
}

NomaOrder default_noma_order(const ChannelSet& ch) {
    NomaOrder order;
    const int n_s = ch.num_beams();
    VectorXd weakest = VectorXd::Constant(n_s, std::numeric_limits<double>::infinity());
    for (int k = 0; k < ch.num_sus(); ++k)
        weakest(ch.group_map[k]) = std::min(weakest(ch.group_map[k]), ch.F.col(k).norm());
    order.beam_sequence.resize(n_s);
    std::iota(order.beam_sequence.begin(), order.beam_sequence.end(), 0);
    std::sort(order.beam_sequence.begin(), order.beam_sequence.end(),
              [&](int a, int b) { return weakest(a) < weakest(b); });
    order.cu_sequence.resize(ch.num_cus());
    std::iota(order.cu_sequence.begin(), order.cu_sequence.end(), 0);
    std::sort(order.cu_sequence.begin(), order.cu_sequence.end(),
              [&](int a, int b) { return ch.H.col(a).norm() > ch.H.col(b).norm(); });
    return order;
}

namespace {

void check_permutation(const std::vector<int>& seq, int n, const char* what) {
    std::vector<bool> seen(n, false);
    if (static_cast<int>(seq.size()) != n)
        throw std::invalid_argument(std::string("noma_rates: bad ") + what + " permutation");
    for (int v : seq) {
        if (v < 0 || v >= n || seen[v])
            throw std::invalid_argument(std::string("noma_rates: bad ") + what + " permutation");
        seen[v] = true;
    }
}

} // namespace

RateVector noma_rates(const ChannelSet& ch, const BeamformerSet& bf, const NomaOrder& order,
                      const VectorXd& sigma2_su, const VectorXd& sigma2_cu) {
    if (bf.mode != Mode::Coordinated) throw std::invalid_argument("noma_rates: coordinated only");
    const int n_s = ch.num_beams(), k_s = ch.num_sus(), k_t = ch.num_cus();
    check_permutation(order.beam_sequence, n_s, "beam");
    check_permutation(order.cu_sequence, k_t, "cu");
    std::vector<int> beam_pos(n_s), cu_pos(k_t);
    for (int i = 0; i < n_s; ++i) beam_pos[order.beam_sequence[i]] = i;
    for (int i = 0; i < k_t; ++i) cu_pos[order.cu_sequence[i]] = i;

    RateVector rv;
    rv.beam_totals = VectorXd::Zero(n_s);
    rv.cu_totals = VectorXd::Zero(k_t);
    rv.sinrs.su_common = VectorXd::Zero(k_s);
    rv.sinrs.cu_common = VectorXd::Zero(k_t);
    rv.sinrs.su_private = VectorXd::Zero(k_s);
    rv.sinrs.cu_private = VectorXd::Zero(k_t);

    // Stream of beam n must be decoded by every SU whose own beam sits at the
    // same or a later position: earlier streams cancelled, later ones noise.
    for (int n = 0; n < n_s; ++n) {
        double rate = std::numeric_limits<double>::infinity();
        for (int k = 0; k < k_s; ++k) {
            if (beam_pos[ch.group_map[k]] < beam_pos[n]) continue;
            const VectorXcd fw = bf.W.adjoint() * ch.F.col(k);
            double intf = sigma2_su(k);
            for (int i = 0; i < n_s; ++i)
                if (beam_pos[i] > beam_pos[n]) intf += std::norm(fw(1 + i));
            const double sinr = std::norm(fw(1 + n)) / intf;
            rate = std::min(rate, rate_bps(sinr));
            if (ch.group_map[k] == n) rv.sinrs.su_private(k) = sinr;
        }
        rv.beam_totals(n) = rate;
    }
    for (int j = 0; j < k_t; ++j) {
        double rate = std::numeric_limits<double>::infinity();
        for (int k = 0; k < k_t; ++k) {
            if (cu_pos[k] < cu_pos[j]) continue;
            const VectorXcd hp = bf.P.adjoint() * ch.H.col(k);
            double intf = sigma2_cu(k);
            if (bf.W.size() > 0) intf += (bf.W.adjoint() * ch.Z.col(k)).squaredNorm();
            for (int i = 0; i < k_t; ++i)
                if (cu_pos[i] > cu_pos[j]) intf += std::norm(hp(1 + i));
            const double sinr = std::norm(hp(1 + j)) / intf;
            rate = std::min(rate, rate_bps(sinr));
            if (k == j) rv.sinrs.cu_private(k) = sinr;
        }
        rv.cu_totals(j) = rate;
    }
    return rv;
}

double mmf_objective(const RateVector& rates) {
    double m = std::numeric_limits<double>::infinity();
    if (rates.beam_totals.size()) m = std::min(m, rates.beam_totals.minCoeff());
    if (rates.cu_totals.size()) m = std::min(m, rates.cu_totals.minCoeff());
    return std::isfinite(m) ? m : 0.0;
}

VectorXd split_portions(const VectorXd& private_rates, double common_budget) {
    const int n = static_cast<int>(private_rates.size());
    VectorXd c = VectorXd::Zero(n);
    if (n == 0 || common_budget <= 0) return c;
    // Feasibility of target q needs sum max(0, q - r_k) <= budget; monotone in q.
    double lo = private_rates.minCoeff();
    double hi = private_rates.maxCoeff() + common_budget;
    for (int it = 0; it < 100; ++it) {
        const double q = 0.5 * (lo + hi);
        double need = 0.0;
        for (int k = 0; k < n; ++k) need += std::max(0.0, q - private_rates(k));
        (need <= common_budget ? lo : hi) = q;
    }
    double need = 0.0;
    for (int k = 0; k < n; ++k) {
        c(k) = std::max(0.0, lo - private_rates(k));
        need += c(k);
    }
    // Hand any leftover to the first user; keeps sum exactly at the budget.
    if (need < common_budget) c(0) += common_budget - need;
    return c;
}

} // namespace stin
