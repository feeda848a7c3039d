#include "flagseq/seqcore.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace flagseq {

const char* to_string(AfCase c) {
    return c == AfCase::Periodic ? "periodic" : "aperiodic";
}

AfCase af_case_from_string(const std::string& s) {
    if (s == "periodic") return AfCase::Periodic;
    if (s == "aperiodic") return AfCase::Aperiodic;
    throw param_error("unknown AF case '" + s + "' (expected periodic|aperiodic)");
}

ComplexSeq::ComplexSeq(std::vector<cplx> samples, int start_index)
    : samples_(std::move(samples)), start_(start_index) {
    if (samples_.empty()) throw param_error("ComplexSeq: length must be >= 1");
    for (const cplx& v : samples_) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw param_error("ComplexSeq: non-finite sample");
    }
}

double ComplexSeq::energy() const {
    double e = 0.0;
    for (const cplx& v : samples_) e += std::norm(v);
    return e;
}

std::string ComplexSeq::to_json() const {
    nlohmann::json j;
    j["start_index"] = start_;
    auto& re = j["re"] = nlohmann::json::array();
    auto& im = j["im"] = nlohmann::json::array();
    for (const cplx& v : samples_) {
        re.push_back(v.real());
        im.push_back(v.imag());
    }
    return j.dump();
}

ComplexSeq ComplexSeq::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    if (re.size() != im.size()) throw param_error("ComplexSeq json: re/im length mismatch");
    std::vector<cplx> s(re.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = cplx(re[i].get<double>(), im[i].get<double>());
    return ComplexSeq(std::move(s), j.at("start_index").get<int>());
}

void ComplexSeq::write_csv(std::ostream& os) const {
    os.precision(17);
    os << "n,re,im\n";
    for (int i = 0; i < size(); ++i)
        os << (start_ + i) << ',' << samples_[i].real() << ',' << samples_[i].imag() << '\n';
}

ComplexSeq ComplexSeq::read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw param_error("ComplexSeq csv: empty input");
    std::vector<cplx> samples;
    int start = 0;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        std::getline(row, field, ',');
        const int n = std::stoi(field);
        std::getline(row, field, ',');
        const double re = std::stod(field);
        std::getline(row, field, ',');
        const double im = std::stod(field);
        if (first) {
            start = n;
            first = false;
        }
        samples.emplace_back(re, im);
    }
    return ComplexSeq(std::move(samples), start);
}

void ChirpParams::validate() const {
    if (n < 1) throw param_error("ChirpParams: N must be >= 1");
    if (xi <= -n || xi >= n)
        throw param_error("ChirpParams: xi=" + std::to_string(xi) + " outside [1-N, N-1] for N=" +
                          std::to_string(n));
    if (q <= -n || q >= n)
        throw param_error("ChirpParams: q=" + std::to_string(q) + " outside [1-N, N-1] for N=" +
                          std::to_string(n));
    if (tau_ext < 0) throw param_error("ChirpParams: tau_ext must be >= 0");
}

void Zone::validate() const {
    if (tau_max < 0 || omega_max < 0) throw param_error("Zone: tau_max and omega_max must be >= 0");
}

ComplexSeq make_chirp(const ChirpParams& p) {
    p.validate();
    const double scale = 1.0 / std::sqrt(static_cast<double>(p.n));
    std::vector<cplx> s(static_cast<std::size_t>(p.n));
    for (int n = 0; n < p.n; ++n) {
        const double phase = kPi * n * (static_cast<double>(p.xi) * n + p.q) / p.n;
        s[static_cast<std::size_t>(n)] = std::polar(scale, phase);
    }
    return ComplexSeq(std::move(s), 0);
}

ComplexSeq extend_chirp(const ChirpParams& p) {
    p.validate();
    if (p.tau_ext < 1)
        throw param_error("extend_chirp: tau_ext must be >= 1 (use make_chirp for tau_ext = 0)");
    const double scale = 1.0 / std::sqrt(static_cast<double>(p.n));
    std::vector<cplx> s;
    s.reserve(static_cast<std::size_t>(p.n + 2 * p.tau_ext));
    for (int n = -p.tau_ext; n <= p.n - 1 + p.tau_ext; ++n) {
        const double phase = kPi * n * (static_cast<double>(p.xi) * n + p.q) / p.n;
        s.push_back(std::polar(scale, phase));
    }
    return ComplexSeq(std::move(s), -p.tau_ext);
}

ComplexSeq zero_pad(const ComplexSeq& c, int tau_ext) {
    if (tau_ext < 0) throw param_error("zero_pad: tau_ext must be >= 0");
    if (c.start_index() != 0) throw param_error("zero_pad: input must be a length-N sequence starting at 0");
    std::vector<cplx> s(static_cast<std::size_t>(c.size() + 2 * tau_ext), cplx(0.0, 0.0));
    for (int i = 0; i < c.size(); ++i) s[static_cast<std::size_t>(i + tau_ext)] = c[i];
    return ComplexSeq(std::move(s), -tau_ext);
}

Papr papr(const ComplexSeq& s) {
    const double e = s.energy();
    if (e <= 0.0) throw domain_error("papr: zero-energy sequence");
    double peak = 0.0;
    for (int i = 0; i < s.size(); ++i) peak = std::max(peak, std::norm(s[i]));
    Papr out;
    out.linear = s.size() * peak / e;
    out.db = 10.0 * std::log10(out.linear);
    return out;
}

Papr papr_trimmed(const ComplexSeq& s) {
    int lo = 0;
    int hi = s.size() - 1;
    while (lo <= hi && std::norm(s[lo]) == 0.0) ++lo;
    while (hi >= lo && std::norm(s[hi]) == 0.0) --hi;
    if (lo > hi) throw domain_error("papr: zero-energy sequence");
    std::vector<cplx> core(s.samples().begin() + lo, s.samples().begin() + hi + 1);
    return papr(ComplexSeq(std::move(core), s.start_index() + lo));
}

}  // namespace flagseq
