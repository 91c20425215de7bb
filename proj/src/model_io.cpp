#include "pfm/model_io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pfm/util.hpp"

namespace pfm {
namespace {

constexpr const char* kMagic = "PFM1";

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_reals(std::ostream& out, const std::vector<double>& v, std::size_t per_line) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        out << fmt_double(v[i]);
        out << (((i + 1) % per_line == 0 || i + 1 == v.size()) ? '\n' : ' ');
    }
}

void write_pca(std::ostream& out, const char* name, const PcaModel& m) {
    out << name << ' ' << (m.scope == PcaScope::LowLevel ? "low" : "high") << ' ' << m.input_dim
        << ' ' << m.output_dim << ' ' << m.blocks.size() << '\n';
    for (const auto& [bi, bo] : m.blocks) out << bi << ' ' << bo << '\n';
    write_reals(out, m.mean, std::size_t(m.input_dim));
    write_reals(out, m.basis, std::size_t(m.input_dim));
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::string token() {
        std::string t;
        if (!(in_ >> t)) throw std::runtime_error("model file truncated");
        return t;
    }

    long integer() {
        long v = 0;
        if (!(in_ >> v)) throw std::runtime_error("model file truncated or malformed integer");
        return v;
    }

    double real() {
        double v = 0.0;
        if (!(in_ >> v)) throw std::runtime_error("model file truncated or malformed real");
        return v;
    }

    std::vector<double> reals(std::size_t n) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = real();
        return v;
    }

private:
    std::istream& in_;
};

PcaModel read_pca(Reader& r) {
    PcaModel m;
    const std::string scope = r.token();
    if (scope != "low" && scope != "high") throw std::runtime_error("model file: bad PCA scope");
    m.scope = scope == "low" ? PcaScope::LowLevel : PcaScope::HighLevel;
    m.input_dim = int(r.integer());
    m.output_dim = int(r.integer());
    const long nblocks = r.integer();
    for (long b = 0; b < nblocks; ++b) {
        const int bi = int(r.integer());
        const int bo = int(r.integer());
        m.blocks.emplace_back(bi, bo);
    }
    m.mean = r.reals(std::size_t(m.input_dim));
    m.basis = r.reals(std::size_t(m.input_dim) * std::size_t(m.output_dim));
    return m;
}

}  // namespace

std::string serialize_model(const ModelBundle& b) {
    std::ostringstream payload;

    std::size_t config_lines = 0;
    for (char c : b.config_echo) config_lines += c == '\n' ? 1 : 0;
    payload << "config " << config_lines << '\n' << b.config_echo;

    payload << "gmm " << b.gmm.K << ' ' << b.gmm.D << '\n';
    write_reals(payload, b.gmm.weights, std::size_t(b.gmm.K));
    write_reals(payload, b.gmm.means, std::size_t(b.gmm.D));
    write_reals(payload, b.gmm.variances, std::size_t(b.gmm.D));

    if (b.pca_low.has_value()) write_pca(payload, "pca_low", *b.pca_low);
    if (b.pca_high.has_value()) write_pca(payload, "pca_high", *b.pca_high);

    if (!b.bow_centers.empty()) {
        payload << "bow " << b.bow_k << ' ' << b.bow_centers.size() / std::size_t(b.bow_k) << '\n';
        write_reals(payload, b.bow_centers, b.bow_centers.size() / std::size_t(b.bow_k));
    }

    payload << "ova " << b.ova.labels.size() << ' ' << b.ova.dim << ' ' << fmt_double(b.ova.reg_c)
            << '\n';
    for (std::size_t i = 0; i < b.ova.labels.size(); ++i) {
        payload << b.ova.labels[i] << (i + 1 == b.ova.labels.size() ? '\n' : ' ');
    }
    write_reals(payload, b.ova.weights, std::size_t(std::max(b.ova.dim, 1)));
    write_reals(payload, b.ova.biases, std::max<std::size_t>(b.ova.biases.size(), 1));
    payload << "end\n";

    const std::string body = payload.str();
    char sum[32];
    std::snprintf(sum, sizeof(sum), "%016" PRIx64, fnv1a64(body));
    return std::string(kMagic) + "\n" + body + "checksum " + sum + "\n";
}

ModelBundle deserialize_model(const std::string& text) {
    const auto first_nl = text.find('\n');
    if (first_nl == std::string::npos) throw std::runtime_error("model file truncated");
    const std::string magic = text.substr(0, first_nl);
    if (magic != kMagic) {
        throw std::runtime_error("unsupported model version '" + magic + "' (expected " + kMagic + ")");
    }

    const auto checksum_pos = text.rfind("checksum ");
    if (checksum_pos == std::string::npos || checksum_pos <= first_nl) {
        throw std::runtime_error("model file truncated: missing checksum");
    }
    const std::string body = text.substr(first_nl + 1, checksum_pos - first_nl - 1);
    {
        std::istringstream cs(text.substr(checksum_pos));
        std::string kw, hex;
        cs >> kw >> hex;
        char expect[32];
        std::snprintf(expect, sizeof(expect), "%016" PRIx64, fnv1a64(body));
        if (hex != expect) throw std::runtime_error("model file checksum mismatch");
    }
    if (body.size() < 4 || body.substr(body.size() - 4) != "end\n") {
        throw std::runtime_error("model file truncated: missing end marker");
    }

    std::istringstream in(body);
    Reader r(in);
    ModelBundle b;
    bool have_gmm = false, have_ova = false, done = false;
    while (!done) {
        const std::string section = r.token();
        if (section == "config") {
            const long lines = r.integer();
            std::string line;
            std::getline(in, line);  // rest of the section header
            std::string echo;
            for (long i = 0; i < lines; ++i) {
                if (!std::getline(in, line)) throw std::runtime_error("model file truncated in config");
                echo += line;
                echo += '\n';
            }
            b.config_echo = echo;
        } else if (section == "gmm") {
            b.gmm.K = int(r.integer());
            b.gmm.D = int(r.integer());
            if (b.gmm.K < 1 || b.gmm.D < 1) throw std::runtime_error("model file: bad GMM dims");
            b.gmm.weights = r.reals(std::size_t(b.gmm.K));
            b.gmm.means = r.reals(std::size_t(b.gmm.K) * std::size_t(b.gmm.D));
            b.gmm.variances = r.reals(std::size_t(b.gmm.K) * std::size_t(b.gmm.D));
            have_gmm = true;
        } else if (section == "pca_low") {
            b.pca_low = read_pca(r);
        } else if (section == "pca_high") {
            b.pca_high = read_pca(r);
        } else if (section == "bow") {
            b.bow_k = int(r.integer());
            const long d = r.integer();
            b.bow_centers = r.reals(std::size_t(b.bow_k) * std::size_t(d));
        } else if (section == "ova") {
            const long p = r.integer();
            b.ova.dim = int(r.integer());
            b.ova.reg_c = r.real();
            b.ova.labels.resize(std::size_t(p));
            for (long i = 0; i < p; ++i) b.ova.labels[std::size_t(i)] = r.token();
            b.ova.weights = r.reals(std::size_t(p) * std::size_t(b.ova.dim));
            b.ova.biases = r.reals(std::size_t(p));
            have_ova = true;
        } else if (section == "end") {
            done = true;
        } else {
            throw std::runtime_error("model file: unknown section '" + section + "'");
        }
    }
    if (!have_gmm || !have_ova) throw std::runtime_error("model file incomplete: missing sections");
    return b;
}

void save_model(const ModelBundle& bundle, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file '" + path.string() + "'");
    out << serialize_model(bundle);
}

ModelBundle load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_model(ss.str());
}

}  // namespace pfm
