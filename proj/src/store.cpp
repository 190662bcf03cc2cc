#include "totvar/store.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "totvar/error.hpp"

namespace totvar {

Json to_json(const Vector& v) {
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Json to_json(const Matrix& m) {
    Json out = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

Json to_json(const PosteriorApprox& approx) {
    Json out;
    if (approx.is_particles()) {
        out["form"] = "particles";
        out["particles"] = to_json(approx.particles);
        out["mean"] = nullptr;
        out["cov"] = nullptr;
    } else {
        out["form"] = "gaussian";
        out["particles"] = nullptr;
        out["mean"] = to_json(approx.mean);
        out["cov"] = to_json(approx.cov);
    }
    return out;
}

Json to_json(const ReplicateBundle& b) {
    Json out;
    out["i"] = b.index;
    out["theta"] = to_json(b.theta);
    out["summary"] = to_json(b.summary);
    out["approx"] = to_json(b.approx);
    out["seed"] = b.seed;
    return out;
}

Json to_json(const MomentSummary& s) {
    Json out;
    out["i_used"] = s.i_used;
    out["mu_l"] = to_json(s.mu_l);
    out["mu_r"] = to_json(s.mu_r);
    out["sigma_l"] = to_json(s.sigma_l);
    out["sigma_r1"] = to_json(s.sigma_r1);
    out["sigma_r2"] = to_json(s.sigma_r2);
    out["sigma_r"] = to_json(s.sigma_r());
    return out;
}

Json to_json(const AdjustmentMap& m) {
    Json out;
    out["dim"] = m.dim();
    out["mu_l"] = to_json(m.mu_l);
    out["mu_r"] = to_json(m.mu_r);
    out["chol_c"] = to_json(m.chol_c);
    out["chol_t"] = to_json(m.chol_t);
    out["scale"] = to_json(m.scale);
    out["rho"] = m.rho;
    out["jitter"] = m.jitter;
    return out;
}

Vector vector_from_json(const Json& j) {
    if (!j.is_array()) throw InvalidInput("expected an array of numbers");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InvalidInput("expected a number at position " + std::to_string(i));
        v(static_cast<Index>(i)) = j[i].get<double>();
    }
    return v;
}

Matrix matrix_from_json(const Json& j) {
    if (!j.is_array()) throw InvalidInput("expected an array of rows");
    const auto rows = static_cast<Index>(j.size());
    if (rows == 0) return Matrix(0, 0);
    const auto cols = static_cast<Index>(j[0].size());
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const Vector row = vector_from_json(j[static_cast<std::size_t>(r)]);
        if (row.size() != cols) throw InvalidInput("ragged matrix: row " + std::to_string(r) + " has wrong length");
        m.row(r) = row.transpose();
    }
    return m;
}

PosteriorApprox approx_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("form")) throw InvalidInput("approx: missing \"form\"");
    const std::string form = j.at("form").get<std::string>();
    PosteriorApprox a;
    if (form == "particles") {
        if (!j.contains("particles") || j["particles"].is_null()) {
            throw InvalidInput("approx: particles form without \"particles\"");
        }
        a = PosteriorApprox::from_particles(matrix_from_json(j["particles"]));
    } else if (form == "gaussian") {
        if (!j.contains("mean") || j["mean"].is_null() || !j.contains("cov") || j["cov"].is_null()) {
            throw InvalidInput("approx: gaussian form needs \"mean\" and \"cov\"");
        }
        a = PosteriorApprox::gaussian(vector_from_json(j["mean"]), matrix_from_json(j["cov"]));
    } else {
        throw InvalidInput("approx: unknown form \"" + form + "\"");
    }
    a.validate();
    return a;
}

ReplicateBundle bundle_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidInput("bundle must be a JSON object");
    for (const char* key : {"i", "theta", "summary", "approx", "seed"}) {
        if (!j.contains(key)) throw InvalidInput(std::string("bundle: missing \"") + key + "\"");
    }
    if (!j["i"].is_number_integer() || j["i"].get<long long>() < 0) {
        throw InvalidInput("bundle: \"i\" must be a non-negative integer");
    }
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0)) {
        throw InvalidInput("bundle: \"seed\" must be an unsigned integer");
    }
    ReplicateBundle b;
    b.index = j["i"].get<std::size_t>();
    b.theta = vector_from_json(j["theta"]);
    b.summary = vector_from_json(j["summary"]);
    b.approx = approx_from_json(j["approx"]);
    b.seed = j["seed"].get<std::uint64_t>();
    if (b.approx.dim() != b.theta.size()) {
        throw InvalidInput("bundle: approximation dimension does not match theta length");
    }
    return b;
}

MomentSummary moments_from_json(const Json& j) {
    MomentSummary s;
    s.i_used = j.at("i_used").get<std::size_t>();
    s.mu_l = vector_from_json(j.at("mu_l"));
    s.mu_r = vector_from_json(j.at("mu_r"));
    s.sigma_l = matrix_from_json(j.at("sigma_l"));
    s.sigma_r1 = matrix_from_json(j.at("sigma_r1"));
    s.sigma_r2 = matrix_from_json(j.at("sigma_r2"));
    return s;
}

AdjustmentMap adjustment_from_json(const Json& j) {
    AdjustmentMap m;
    m.mu_l = vector_from_json(j.at("mu_l"));
    m.mu_r = vector_from_json(j.at("mu_r"));
    m.chol_c = matrix_from_json(j.at("chol_c"));
    m.chol_t = matrix_from_json(j.at("chol_t"));
    m.scale = matrix_from_json(j.at("scale"));
    m.rho = j.at("rho").get<double>();
    m.jitter = j.value("jitter", 0.0);
    const Index d = m.mu_l.size();
    if (m.mu_r.size() != d || m.chol_c.rows() != d || m.chol_t.rows() != d || m.scale.rows() != d ||
        m.scale.cols() != d) {
        throw InvalidInput("adjustment map: inconsistent dimensions");
    }
    return m;
}

std::vector<ReplicateBundle> read_store(std::istream& in) {
    std::vector<ReplicateBundle> out;
    std::set<std::size_t> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            ReplicateBundle b = bundle_from_json(Json::parse(line));
            if (!seen.insert(b.index).second) {
                throw InvalidInput("duplicate replicate index " + std::to_string(b.index));
            }
            if (!out.empty() && b.theta.size() != out.front().theta.size()) {
                throw InvalidInput("theta length differs from earlier lines");
            }
            out.push_back(std::move(b));
        } catch (const Json::exception& e) {
            throw InvalidInput("store line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        } catch (const InvalidInput& e) {
            throw InvalidInput("store line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<ReplicateBundle> read_store(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open replicate store " + path.string());
    return read_store(in);
}

void write_store(std::ostream& out, const std::vector<ReplicateBundle>& bundles) {
    for (const auto& b : bundles) out << to_json(b).dump() << '\n';
}

void write_store(const std::filesystem::path& path, const std::vector<ReplicateBundle>& bundles) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InvalidInput("cannot write replicate store " + path.string());
    write_store(out, bundles);
}

void append_store(const std::filesystem::path& path, const std::vector<ReplicateBundle>& bundles) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw InvalidInput("cannot append to replicate store " + path.string());
    write_store(out, bundles);
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw InvalidInput(path.string() + ": malformed JSON: " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace totvar
