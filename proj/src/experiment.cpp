#include "bsim/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <vector>

#include "bsim/dv_protocols.hpp"
#include "bsim/fock.hpp"
#include "bsim/gaussian.hpp"
#include "bsim/measurement.hpp"
#include "bsim/rng.hpp"
#include "parallel.hpp"

namespace bsim {

using json = nlohmann::ordered_json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::int64_t kMaxTrials = 10'000'000;
constexpr int kMaxCutoff = 64;

struct NameEntry {
    ExperimentName name;
    const char* text;
    std::set<std::string> params;
};

const std::vector<NameEntry>& registry() {
    static const std::vector<NameEntry> entries = {
        {ExperimentName::Hom, "hom", {"theta", "phi", "cutoff", "trials"}},
        {ExperimentName::BellMeasure, "bell-measure", {"trials"}},
        {ExperimentName::TeleportDv, "teleport-dv", {"alpha", "beta", "trials"}},
        {ExperimentName::QkdDv, "qkd-dv", {"trials"}},
        {ExperimentName::MdiQkd, "mdi-qkd", {"trials"}},
        {ExperimentName::PhotonSubtract, "photon-subtract", {"theta", "cutoff", "trials"}},
        {ExperimentName::Hadamard, "hadamard", {"alpha", "beta"}},
        {ExperimentName::Cnot, "cnot", {}},
        {ExperimentName::Mzi, "mzi", {"theta", "trials"}},
        {ExperimentName::Rng, "rng", {"trials"}},
        {ExperimentName::G2, "g2", {"alpha", "cutoff"}},
        {ExperimentName::Homodyne, "homodyne", {"alpha", "phi", "cutoff"}},
        {ExperimentName::TeleportCv, "teleport-cv", {"r", "alpha", "trials"}},
        {ExperimentName::QkdCv, "qkd-cv", {"r", "s", "trials"}},
        {ExperimentName::Physicality, "physicality", {"r", "s"}},
    };
    return entries;
}

const NameEntry& entry(ExperimentName name) {
    for (const auto& e : registry())
        if (e.name == name) return e;
    throw std::logic_error("experiment missing from registry");
}

const std::set<std::string> kKnownParams = {"theta", "phi", "r", "s", "alpha",
                                            "beta", "trials", "cutoff"};

double parse_double(const std::string& key, std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
        throw ValidationError(key + ": expected a finite number, got '" + std::string(text) + "'");
    return v;
}

std::int64_t parse_int(const std::string& key, std::string_view text) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
        throw ValidationError(key + ": expected an integer, got '" + std::string(text) + "'");
    return v;
}

// ---- JSON encoding ---------------------------------------------------------

json encode(cplx z) { return json::array({z.real(), z.imag()}); }

template <typename Derived>
json encode_matrix(const Eigen::MatrixBase<Derived>& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if constexpr (Eigen::NumTraits<typename Derived::Scalar>::IsComplex)
                row.push_back(encode(m(i, j)));
            else
                row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json encode_modes(const std::vector<ModeId>& modes) {
    json out = json::array();
    for (const auto& m : modes) out.push_back(to_string(m));
    return out;
}

json encode_state(const FockState& state) {
    json terms = json::array();
    for (const auto& [counts, amp] : state.terms())
        terms.push_back({{"counts", counts}, {"amplitude", encode(amp)}});
    return {{"modes", encode_modes(state.modes())}, {"terms", terms}};
}

json encode_distribution(const OutcomeDistribution& dist) {
    json rows = json::array();
    for (const auto& [counts, p] : dist.probabilities)
        rows.push_back({{"counts", counts}, {"probability", p}});
    return {{"modes", encode_modes(dist.modes)}, {"outcomes", rows}};
}

json encode_signature(const DetectorSignature& s) {
    json fired = json::array();
    for (std::size_t k = 0; k < s.size(); ++k)
        for (int c = 0; c < s[k]; ++c) fired.push_back(kDetectorNames[k]);
    return {{"counts", s}, {"fired", fired}};
}

std::string counts_key(const Occupation& counts) {
    std::string out;
    for (std::size_t k = 0; k < counts.size(); ++k) out += (k ? "," : "") + std::to_string(counts[k]);
    return out;
}

// ---- sampling --------------------------------------------------------------

// Index drawn from `weights` with one uniform variate.
std::size_t draw_index(const std::vector<double>& weights, double u) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double target = u * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (target < acc) return i;
    }
    return weights.size() - 1;
}

template <typename Record, typename Fn>
std::vector<Record> run_trials(const ExperimentSpec& spec, Fn&& trial) {
    const auto n = static_cast<std::size_t>(*spec.params.trials);
    std::vector<Record> records(n);
    detail::parallel_for(n, [&](std::size_t i) { records[i] = trial(trial_seed(spec.seed, i)); });
    return records;
}

double pearson(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 2) return 0.0;
    detail::CompensatedSum sa, sb;
    for (const auto& [a, b] : pairs) {
        sa.add(a);
        sb.add(b);
    }
    const double n = static_cast<double>(pairs.size());
    const double ma = sa.value() / n;
    const double mb = sb.value() / n;
    detail::CompensatedSum saa, sbb, sab;
    for (const auto& [a, b] : pairs) {
        saa.add((a - ma) * (a - ma));
        sbb.add((b - mb) * (b - mb));
        sab.add((a - ma) * (b - mb));
    }
    const double denom = std::sqrt(saa.value() * sbb.value());
    return denom > 0.0 ? sab.value() / denom : 0.0;
}

// ---- parameter resolution --------------------------------------------------

struct Resolved {
    double theta = kPi / 4;
    double phi = kPi / 2;
    double r = 1.0;
    double s = 0.0;
    cplx alpha{1.0, 0.0};
    cplx beta{0.0, 0.0};
    int cutoff = kDefaultCutoff;
};

Resolved resolve(const ExperimentParams& p) {
    Resolved r;
    if (p.theta) r.theta = *p.theta;
    if (p.phi) r.phi = *p.phi;
    if (p.r) r.r = *p.r;
    if (p.s) r.s = *p.s;
    if (p.alpha) r.alpha = *p.alpha;
    if (p.beta) r.beta = *p.beta;
    if (p.cutoff) r.cutoff = *p.cutoff;
    return r;
}

json effective_params(const ExperimentSpec& spec) {
    const Resolved v = resolve(spec.params);
    const auto& allowed = entry(spec.name).params;
    json out = json::object();
    if (allowed.contains("theta")) out["theta"] = v.theta;
    if (allowed.contains("phi")) out["phi"] = v.phi;
    if (allowed.contains("r")) out["r"] = v.r;
    if (allowed.contains("s")) out["s"] = v.s;
    if (allowed.contains("alpha")) out["alpha"] = encode(v.alpha);
    if (allowed.contains("beta")) out["beta"] = encode(v.beta);
    if (allowed.contains("cutoff")) {
        if (spec.name == ExperimentName::G2 || spec.name == ExperimentName::Homodyne)
            out["cutoff"] = spec.params.cutoff ? json(*spec.params.cutoff) : json("auto");
        else
            out["cutoff"] = v.cutoff;
    }
    if (spec.params.trials) out["trials"] = *spec.params.trials;
    return out;
}

void require_qubit(cplx alpha, cplx beta) {
    if (std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > 1e-12)
        throw ValidationError("|alpha|^2 + |beta|^2 must equal 1 to 1e-12");
}

// ---- experiments -----------------------------------------------------------

void run_hom(const ExperimentSpec& spec, ExperimentResult& out) {
    const Resolved v = resolve(spec.params);
    const std::vector<ModeId> modes = {mode(0), mode(1)};
    const BsParams bs{v.theta, v.phi};
    const FockState output =
        apply_beamsplitter(FockState::basis(modes, {1, 1}, v.cutoff), modes[0], modes[1], bs);
    const auto dist = photon_distribution(output, modes);
    out.exact = {{"mode_matrix", encode_matrix(bs_mode_matrix(bs))},
                 {"output_state", encode_state(output)},
                 {"distribution", encode_distribution(dist)},
                 {"coincidence_probability", dist.probability({1, 1})},
                 {"bunching_probability", dist.probability({2, 0}) + dist.probability({0, 2})}};
    if (!spec.params.trials) return;
    const auto records =
        run_trials<Occupation>(spec, [&](std::uint64_t seed) { return sample_outcome(dist, seed); });
    std::map<std::string, std::int64_t> counts;
    std::int64_t coincidences = 0;
    for (const auto& c : records) {
        ++counts[counts_key(c)];
        if (c[0] == 1 && c[1] == 1) ++coincidences;
    }
    out.sampled = {{"counts", counts},
                   {"coincidence_rate", static_cast<double>(coincidences) / records.size()}};
}

void run_bell_measure(const ExperimentSpec& spec, ExperimentResult& out) {
    json states = json::object();
    json confusion = json::object();
    std::vector<std::vector<std::pair<DetectorSignature, double>>> tables;
    for (BellKind kind : kAllBellKinds) {
        const auto bm = bell_measure(bell_state(kind), 0);
        json sigs = json::array();
        std::vector<std::pair<DetectorSignature, double>> table(bm.table.begin(), bm.table.end());
        for (const auto& [sig, p] : table) {
            json row = encode_signature(sig);
            row["probability"] = p;
            row["class"] = to_string(classify(sig));
            sigs.push_back(std::move(row));
        }
        json classes = json::object();
        for (const auto& [cls, p] : bm.class_probabilities) classes[to_string(cls)] = p;
        confusion[to_string(kind)] = classes;
        states[to_string(kind)] = {{"signatures", sigs}};
        tables.push_back(std::move(table));
    }
    out.exact = {{"confusion", confusion}, {"states", states}};
    if (!spec.params.trials) return;

    struct Record {
        std::size_t kind = 0;
        BellClass cls = BellClass::Ambiguous;
    };
    const auto records = run_trials<Record>(spec, [&](std::uint64_t seed) {
        Rng rng = make_rng(seed);
        const auto k = std::min<std::size_t>(3, static_cast<std::size_t>(4 * uniform01(rng)));
        std::vector<double> w;
        for (const auto& [sig, p] : tables[k]) w.push_back(p);
        const auto& sig = tables[k][draw_index(w, uniform01(rng))].first;
        return Record{k, classify(sig)};
    });
    std::map<std::string, std::map<std::string, std::int64_t>> counts;
    for (const auto& rec : records) ++counts[to_string(kAllBellKinds[rec.kind])][to_string(rec.cls)];
    out.sampled = {{"confusion_counts", counts}};
}

void run_teleport_dv(const ExperimentSpec& spec, ExperimentResult& out) {
    const Resolved v = resolve(spec.params);
    const auto branches = teleport_dv_branches(v.alpha, v.beta);
    json rows = json::array();
    double success = 0.0;
    double min_fidelity = 1.0;
    for (const auto& b : branches) {
        json row = encode_signature(b.signature);
        row["class"] = to_string(b.classification);
        row["probability"] = b.probability;
        row["correction"] = to_string(b.correction);
        if (b.classification != BellClass::Ambiguous) {
            success += b.probability;
            min_fidelity = std::min(min_fidelity, b.fidelity);
            row["bob_state"] = encode_state(b.bob_state);
            row["fidelity"] = b.fidelity;
        }
        rows.push_back(std::move(row));
    }
    out.exact = {{"success_probability", success},
                 {"min_success_fidelity", min_fidelity},
                 {"branches", rows}};
    if (!spec.params.trials) return;

    std::vector<double> w;
    for (const auto& b : branches) w.push_back(b.probability);
    const auto picks = run_trials<std::size_t>(spec, [&](std::uint64_t seed) {
        Rng rng = make_rng(seed);
        return draw_index(w, uniform01(rng));
    });
    std::int64_t successes = 0;
    double sampled_min = 1.0;
    std::map<std::string, std::int64_t> corrections;
    for (std::size_t idx : picks) {
        const auto& b = branches[idx];
        ++corrections[to_string(b.correction)];
        if (b.classification == BellClass::Ambiguous) continue;
        ++successes;
        sampled_min = std::min(sampled_min, b.fidelity);
    }
    out.sampled = {{"successes", successes},
                   {"success_rate", static_cast<double>(successes) / picks.size()},
                   {"min_success_fidelity", successes ? json(sampled_min) : json(nullptr)},
                   {"corrections", corrections}};
}

void run_qkd_dv(const ExperimentSpec& spec, ExperimentResult& out) {
    const auto branches = qkd_branches();
    double sift = 0.0;
    double agree = 0.0;
    for (const auto& b : branches) {
        if (!b.record.kept) continue;
        sift += b.probability;
        if (b.record.alice_bit == b.record.bob_bit) agree += b.probability;
    }
    out.exact = {{"sift_probability", sift},
                 {"agreement_probability", agree / sift},
                 {"qber", 1.0 - agree / sift},
                 {"branch_count", branches.size()}};
    if (!spec.params.trials) return;

    std::vector<double> w;
    for (const auto& b : branches) w.push_back(b.probability);
    const auto picks = run_trials<std::size_t>(spec, [&](std::uint64_t seed) {
        Rng rng = make_rng(seed);
        return draw_index(w, uniform01(rng));
    });
    std::string alice_key, bob_key;
    std::int64_t errors = 0;
    for (std::size_t idx : picks) {
        const auto& rec = branches[idx].record;
        if (!rec.kept) continue;
        alice_key += static_cast<char>('0' + *rec.alice_bit);
        bob_key += static_cast<char>('0' + *rec.bob_bit);
        if (rec.alice_bit != rec.bob_bit) ++errors;
    }
    const double kept = static_cast<double>(alice_key.size());
    out.sampled = {{"sift_rate", kept / picks.size()},
                   {"qber", kept > 0 ? json(errors / kept) : json(nullptr)},
                   {"alice_key", alice_key},
                   {"bob_key", bob_key}};
}

void run_mdi_qkd(const ExperimentSpec& spec, ExperimentResult& out) {
    json relation = json::object();
    for (Basis basis : {Basis::Rectilinear, Basis::Diagonal}) {
        json row = json::object();
        for (BellClass cls : {BellClass::PhiMinus, BellClass::PhiPlus})
            row[to_string(cls)] = mdi_bits_differ(basis, cls) ? "differ" : "agree";
        relation[to_string(basis)] = row;
    }
    json inputs = json::array();
    double kept = 0.0;
    for (Basis ab : {Basis::Rectilinear, Basis::Diagonal})
        for (int abit : {0, 1})
            for (Basis bb : {Basis::Rectilinear, Basis::Diagonal})
                for (int bbit : {0, 1}) {
                    const auto dist = mdi_class_distribution({ab, abit}, {bb, bbit});
                    json classes = json::object();
                    double unambiguous = 0.0;
                    for (const auto& [cls, p] : dist) {
                        classes[to_string(cls)] = p;
                        if (cls != BellClass::Ambiguous) unambiguous += p;
                    }
                    if (ab == bb) kept += unambiguous / 16.0;
                    inputs.push_back({{"alice", {to_string(ab), abit}},
                                      {"bob", {to_string(bb), bbit}},
                                      {"classes", classes}});
                }
    out.exact = {{"bit_relation", relation}, {"kept_probability", kept}, {"inputs", inputs}};
    if (!spec.params.trials) return;

    const auto rounds = run_trials<MdiRound>(spec, [](std::uint64_t seed) {
        Rng rng = make_rng(seed);
        auto choice = [&rng] {
            const Basis basis = uniform01(rng) < 0.5 ? Basis::Rectilinear : Basis::Diagonal;
            return Bb84Choice{basis, uniform01(rng) < 0.5 ? 0 : 1};
        };
        const Bb84Choice alice = choice();
        const Bb84Choice bob = choice();
        return mdi_qkd_round(alice, bob, rng());
    });
    std::string alice_key, bob_key;
    std::int64_t errors = 0;
    for (const auto& round : rounds) {
        if (!round.kept) continue;
        alice_key += static_cast<char>('0' + *round.alice_bit);
        bob_key += static_cast<char>('0' + *round.bob_bit);
        if (round.alice_bit != round.bob_bit) ++errors;
    }
    const double n_kept = static_cast<double>(alice_key.size());
    out.sampled = {{"kept_rate", n_kept / rounds.size()},
                   {"qber", n_kept > 0 ? json(errors / n_kept) : json(nullptr)},
                   {"alice_key", alice_key},
                   {"bob_key", bob_key}};
}

void run_photon_subtract(const ExperimentSpec& spec, ExperimentResult& out) {
    const Resolved v = resolve(spec.params);
    FockState::Terms terms;
    terms[{1}] = 1.0 / std::numbers::sqrt2;
    terms[{2}] = 1.0 / std::numbers::sqrt2;
    const FockState input({mode(0)}, std::move(terms), v.cutoff);
    const auto sub = photon_subtract(input, v.theta);
    const FockState ideal = normalize(annihilation(input, mode(0))).state;
    const double f = fidelity(sub.state, ideal);
    out.exact = {{"input", encode_state(input)},
                 {"herald_probability", sub.probability},
                 {"conditional_state", encode_state(sub.state)},
                 {"ideal_state", encode_state(ideal)},
                 {"fidelity", f},
                 {"infidelity", 1.0 - f}};
    if (!spec.params.trials) return;
    const double p = sub.probability;
    const auto heralds = run_trials<char>(spec, [p](std::uint64_t seed) {
        Rng rng = make_rng(seed);
        return static_cast<char>(uniform01(rng) < p);
    });
    const auto n = std::count(heralds.begin(), heralds.end(), 1);
    out.sampled = {{"heralds", n}, {"herald_rate", static_cast<double>(n) / heralds.size()}};
}

void run_hadamard(const ExperimentSpec& spec, ExperimentResult& out) {
    const Resolved v = resolve(spec.params);
    const Rails rails{mode(0), mode(1)};
    const auto q = hadamard_dualrail(make_dual_rail(v.alpha, v.beta, rails));
    out.exact = {{"matrix", encode_matrix(hadamard_matrix())},
                 {"input", {encode(v.alpha), encode(v.beta)}},
                 {"output", {encode(q.state.amplitude({1, 0})), encode(q.state.amplitude({0, 1}))}}};
}

void run_cnot(const ExperimentSpec&, ExperimentResult& out) {
    out.exact = {{"matrix", encode_matrix(cnot_matrix())},
                 {"basis_order", {"00", "01", "10", "11"}}};
}

void run_mzi(const ExperimentSpec& spec, ExperimentResult& out) {
    const Resolved v = resolve(spec.params);
    const FockState state = mzi(v.theta);
    const std::vector<ModeId> rails = {mode(0), mode(1)};
    const auto dist = photon_distribution(state, rails);
    out.exact = {{"logical_amplitudes", {encode(state.amplitude({1, 0})), encode(state.amplitude({0, 1}))}},
                 {"probabilities", {dist.probability({1, 0}), dist.probability({0, 1})}}};
    if (!spec.params.trials) return;
    const auto records =
        run_trials<Occupation>(spec, [&](std::uint64_t seed) { return sample_outcome(dist, seed); });
    std::int64_t ones = 0;
    for (const auto& c : records) ones += c[1];
    out.sampled = {{"logical_zero", static_cast<std::int64_t>(records.size()) - ones},
                   {"logical_one", ones}};
}

void run_rng(const ExperimentSpec& spec, ExperimentResult& out) {
    const auto dist = rng_distribution();
    out.exact = {{"distribution", {{"0", dist.probability({1, 0})}, {"1", dist.probability({0, 1})}}}};
    if (!spec.params.trials) return;
    const auto bits = run_trials<int>(spec, [](std::uint64_t seed) { return rng_bit(seed); });
    std::string text;
    text.reserve(bits.size());
    std::int64_t ones = 0;
    for (int b : bits) {
        text += static_cast<char>('0' + b);
        ones += b;
    }
    const double n = static_cast<double>(bits.size());
    const double zeros = n - ones;
    const double chi2 = ((zeros - n / 2) * (zeros - n / 2) + (ones - n / 2) * (ones - n / 2)) / (n / 2);
    out.sampled = {{"bits", text},
                   {"zeros", static_cast<std::int64_t>(zeros)},
                   {"ones", ones},
                   {"chi_square", chi2}};
}

void run_g2(const ExperimentSpec& spec, ExperimentResult& out) {
    const Resolved v = resolve(spec.params);
    const FockState coherent = coherent_state(v.alpha, spec.params.cutoff);
    json numbers = json::array();
    for (int n = 1; n <= 5; ++n) numbers.push_back({{"n", n}, {"g2", g2_zero(number_state(n))}});
    out.exact = {{"coherent", {{"alpha", encode(v.alpha)}, {"cutoff", coherent.cutoff()},
                               {"g2", g2_zero(coherent)}}},
                 {"number_states", numbers}};
}

void run_homodyne(const ExperimentSpec& spec, ExperimentResult& out) {
    const Resolved v = resolve(spec.params);
    constexpr double lo = 1.0;
    const FockState state = coherent_state(v.alpha, spec.params.cutoff);
    out.exact = {{"lo_amplitude", lo},
                 {"cutoff", state.cutoff()},
                 {"mean", homodyne_mean(state, v.phi, lo)},
                 {"x_quadrature", homodyne_mean(state, -kPi / 2, lo)},
                 {"y_quadrature", homodyne_mean(state, 0.0, lo)}};
}

void run_teleport_cv(const ExperimentSpec& spec, ExperimentResult& out) {
    const Resolved v = resolve(spec.params);
    const double gain = std::numbers::sqrt2;
    const Eigen::Matrix2d vac = 0.5 * Eigen::Matrix2d::Identity();
    const Eigen::Matrix2d cov = cv_teleport_cov(vac, tmsv(v.r), gain);
    const double x_in = std::numbers::sqrt2 * v.alpha.real();
    const double p_in = std::numbers::sqrt2 * v.alpha.imag();
    out.exact = {{"gain", gain},
                 {"input_mean", {x_in, p_in}},
                 {"input_cov", encode_matrix(vac)},
                 {"output_cov", encode_matrix(cov)},
                 {"added_noise", std::exp(-2 * v.r)}};
    if (!spec.params.trials) return;
    const auto stats = cv_teleport_mc(x_in, p_in, v.r, gain,
                                      static_cast<std::size_t>(*spec.params.trials), spec.seed);
    out.sampled = {{"mean", {stats.mean(0), stats.mean(1)}},
                   {"cov", encode_matrix(stats.cov)},
                   {"max_identity_residual", stats.max_identity_residual}};
}

void run_qkd_cv(const ExperimentSpec& spec, ExperimentResult& out) {
    const Resolved v = resolve(spec.params);
    const GaussianState channel = squeeze_channel(tmsv(v.r), v.s);
    const auto& c = channel.cov();
    out.exact = {{"channel_cov", encode_matrix(c)},
                 {"bob_cov_given_x", encode_matrix(homodyne_condition(channel, 0, Quadrature::X).cov())},
                 {"bob_cov_given_p", encode_matrix(homodyne_condition(channel, 0, Quadrature::P).cov())},
                 {"x_correlation", c(0, 2) / std::sqrt(c(0, 0) * c(2, 2))},
                 {"p_correlation", c(1, 3) / std::sqrt(c(1, 1) * c(3, 3))}};
    if (!spec.params.trials) return;
    const double r = v.r;
    const double s = v.s;
    const auto rounds =
        run_trials<CvQkdRound>(spec, [r, s](std::uint64_t seed) { return cv_qkd_round(r, s, seed); });
    std::vector<std::pair<double, double>> xs, ps;
    std::string alice_key, bob_key;
    std::int64_t errors = 0;
    for (const auto& rd : rounds) {
        if (!rd.kept) continue;
        const bool is_x = rd.alice_quadrature == Quadrature::X;
        (is_x ? xs : ps).emplace_back(rd.alice_value, rd.bob_value);
        // Sign binning; x outcomes are anticorrelated, so Bob inverts them.
        const int a = rd.alice_value >= 0.0 ? 1 : 0;
        const int b = (rd.bob_value >= 0.0 ? 1 : 0) ^ (is_x ? 1 : 0);
        alice_key += static_cast<char>('0' + a);
        bob_key += static_cast<char>('0' + b);
        if (a != b) ++errors;
    }
    const double kept = static_cast<double>(alice_key.size());
    out.sampled = {{"kept_fraction", kept / rounds.size()},
                   {"x_correlation", pearson(xs)},
                   {"p_correlation", pearson(ps)},
                   {"bit_error_rate", kept > 0 ? json(errors / kept) : json(nullptr)},
                   {"alice_key", alice_key},
                   {"bob_key", bob_key}};
}

void run_physicality(const ExperimentSpec& spec, ExperimentResult& out) {
    const Resolved v = resolve(spec.params);
    auto report = [](const Eigen::MatrixXd& cov) {
        const auto rep = is_physical(cov);
        return json{{"physical", rep.physical}, {"min_eigenvalue", rep.min_eigenvalue}};
    };
    const GaussianState channel = squeeze_channel(tmsv(v.r), v.s);
    out.exact = {{"vacuum", report(GaussianState::vacuum(1).cov())},
                 {"tmsv", report(tmsv(v.r).cov())},
                 {"squeezed_channel", report(channel.cov())},
                 {"conditioned_on_x", report(homodyne_condition(channel, 0, Quadrature::X).cov())},
                 {"conditioned_on_p", report(homodyne_condition(channel, 0, Quadrature::P).cov())},
                 {"sub_vacuum", report(0.25 * Eigen::Matrix2d::Identity())}};
}

std::string render_value(const json& value) {
    std::string text = value.is_string() ? value.get<std::string>() : value.dump();
    constexpr std::size_t kMaxWidth = 96;
    if (text.size() > kMaxWidth) text = text.substr(0, kMaxWidth) + "...";
    return text;
}

void render_section(std::ostringstream& os, const std::string& title, const json& section) {
    os << title << ":\n";
    if (section.empty()) {
        os << "  (none)\n";
        return;
    }
    for (const auto& [key, value] : section.items()) os << "  " << key << ": " << render_value(value) << '\n';
}

}  // namespace

const char* to_string(ExperimentName name) { return entry(name).text; }

ExperimentName parse_experiment(const std::string& name) {
    for (const auto& e : registry())
        if (name == e.text) return e.name;
    throw ValidationError("unknown experiment '" + name + "'");
}

cplx parse_complex(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) return {parse_double("complex", text), 0.0};
    return {parse_double("complex", std::string_view(text).substr(0, comma)),
            parse_double("complex", std::string_view(text).substr(comma + 1))};
}

ExperimentSpec make_spec(const std::string& name, const std::map<std::string, std::string>& params,
                         std::uint64_t seed) {
    ExperimentSpec spec;
    spec.name = parse_experiment(name);
    spec.seed = seed;
    const auto& allowed = entry(spec.name).params;
    for (const auto& [key, text] : params) {
        if (!kKnownParams.contains(key)) throw ValidationError("unknown parameter '" + key + "'");
        if (!allowed.contains(key))
            throw ValidationError("parameter '" + key + "' does not apply to " + name);
        auto& p = spec.params;
        if (key == "theta") p.theta = parse_double(key, text);
        else if (key == "phi") p.phi = parse_double(key, text);
        else if (key == "r") p.r = parse_double(key, text);
        else if (key == "s") p.s = parse_double(key, text);
        else if (key == "alpha" || key == "beta") {
            cplx z;
            try {
                z = parse_complex(text);
            } catch (const ValidationError&) {
                throw ValidationError(key + ": expected 're,im', got '" + text + "'");
            }
            (key == "alpha" ? p.alpha : p.beta) = z;
        } else if (key == "trials") p.trials = parse_int(key, text);
        else if (key == "cutoff") {
            const auto c = parse_int(key, text);
            if (c < 0 || c > kMaxCutoff) throw ValidationError("cutoff must lie in [0, 64]");
            p.cutoff = static_cast<int>(c);
        }
    }
    validate(spec);
    return spec;
}

void validate(const ExperimentSpec& spec) {
    const auto& p = spec.params;
    const auto& allowed = entry(spec.name).params;
    auto check_allowed = [&](bool present, const char* key) {
        if (present && !allowed.contains(key))
            throw ValidationError(std::string("parameter '") + key + "' does not apply to " +
                                  to_string(spec.name));
    };
    check_allowed(p.theta.has_value(), "theta");
    check_allowed(p.phi.has_value(), "phi");
    check_allowed(p.r.has_value(), "r");
    check_allowed(p.s.has_value(), "s");
    check_allowed(p.alpha.has_value(), "alpha");
    check_allowed(p.beta.has_value(), "beta");
    check_allowed(p.trials.has_value(), "trials");
    check_allowed(p.cutoff.has_value(), "cutoff");

    for (const auto& x : {p.theta, p.phi, p.r, p.s})
        if (x && !std::isfinite(*x)) throw ValidationError("parameters must be finite");
    for (const auto& z : {p.alpha, p.beta})
        if (z && !(std::isfinite(z->real()) && std::isfinite(z->imag())))
            throw ValidationError("parameters must be finite");
    if (p.trials && (*p.trials < 1 || *p.trials > kMaxTrials))
        throw ValidationError("trials must lie in [1, 10000000]");
    if (p.cutoff && (*p.cutoff < 0 || *p.cutoff > kMaxCutoff))
        throw ValidationError("cutoff must lie in [0, 64]");
    if (p.r && *p.r < 0.0) throw ValidationError("r must be non-negative");

    const Resolved v = resolve(p);
    switch (spec.name) {
        case ExperimentName::Hom:
        case ExperimentName::PhotonSubtract:
            if (v.cutoff < 2) throw ValidationError("cutoff must be at least 2 for two-photon inputs");
            if (spec.name == ExperimentName::PhotonSubtract && !(v.theta > 0.0 && v.theta < kPi / 2))
                throw ValidationError("theta must lie in (0, pi/2)");
            break;
        case ExperimentName::Mzi:
            if (!(v.theta >= 0.0 && v.theta <= kPi / 2)) throw ValidationError("theta must lie in [0, pi/2]");
            break;
        case ExperimentName::TeleportDv:
        case ExperimentName::Hadamard:
            require_qubit(v.alpha, v.beta);
            break;
        case ExperimentName::G2:
            if (v.alpha == cplx{}) throw ValidationError("alpha must be nonzero; g2 is undefined for the vacuum");
            [[fallthrough]];
        case ExperimentName::Homodyne:
            if (std::norm(v.alpha) > 100.0) throw ValidationError("|alpha|^2 must not exceed 100");
            break;
        default:
            break;
    }
}

ExperimentResult run(const ExperimentSpec& spec) {
    validate(spec);
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult out;
    out.spec = spec;
    out.params = effective_params(spec);
    out.exact = json::object();
    out.sampled = json::object();
    switch (spec.name) {
        case ExperimentName::Hom: run_hom(spec, out); break;
        case ExperimentName::BellMeasure: run_bell_measure(spec, out); break;
        case ExperimentName::TeleportDv: run_teleport_dv(spec, out); break;
        case ExperimentName::QkdDv: run_qkd_dv(spec, out); break;
        case ExperimentName::MdiQkd: run_mdi_qkd(spec, out); break;
        case ExperimentName::PhotonSubtract: run_photon_subtract(spec, out); break;
        case ExperimentName::Hadamard: run_hadamard(spec, out); break;
        case ExperimentName::Cnot: run_cnot(spec, out); break;
        case ExperimentName::Mzi: run_mzi(spec, out); break;
        case ExperimentName::Rng: run_rng(spec, out); break;
        case ExperimentName::G2: run_g2(spec, out); break;
        case ExperimentName::Homodyne: run_homodyne(spec, out); break;
        case ExperimentName::TeleportCv: run_teleport_cv(spec, out); break;
        case ExperimentName::QkdCv: run_qkd_cv(spec, out); break;
        case ExperimentName::Physicality: run_physicality(spec, out); break;
    }
    out.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
}

json to_json(const ExperimentResult& result) {
    return {{"experiment", to_string(result.spec.name)},
            {"params", result.params},
            {"seed", result.spec.seed},
            {"exact", result.exact},
            {"sampled", result.sampled},
            {"runtime_ms", result.runtime_ms}};
}

std::string emit(const ExperimentResult& result, OutputFormat format) {
    if (format == OutputFormat::Json) return to_json(result).dump(2) + "\n";
    std::ostringstream os;
    os << "experiment: " << to_string(result.spec.name) << '\n' << "seed: " << result.spec.seed << '\n';
    render_section(os, "params", result.params);
    render_section(os, "exact", result.exact);
    render_section(os, "sampled", result.sampled);
    os << "runtime_ms: " << result.runtime_ms << '\n';
    return os.str();
}

}  // namespace bsim
