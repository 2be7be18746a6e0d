#include "ddctrl/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ddctrl {

using json = nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json matrix_json(const Matrix& M) {
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from(const json& j, Index cols_if_empty, const char* what) {
    if (!j.is_array()) throw Error(ErrorKind::io, std::string(what) + " must be an array of rows");
    const Index rows = static_cast<Index>(j.size());
    const Index cols = rows ? static_cast<Index>(j[0].size()) : cols_if_empty;
    Matrix M(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            throw Error(ErrorKind::io, std::string(what) + " has ragged rows");
        }
        for (Index c = 0; c < cols; ++c) M(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return M;
}

}  // namespace

std::string trajectory_to_csv(const Trajectory& w) {
    std::ostringstream os;
    for (Index c = 0; c < w.channels(); ++c) {
        if (c) os << ',';
        os << (c < w.inputs() ? "u" + std::to_string(c + 1) : "y" + std::to_string(c - w.inputs() + 1));
    }
    os << '\n';
    const Matrix& s = w.samples();
    for (Index t = 0; t < w.length(); ++t) {
        for (Index c = 0; c < w.channels(); ++c) {
            if (c) os << ',';
            os << fmt(s(t, c));
        }
        os << '\n';
    }
    return os.str();
}

Trajectory trajectory_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorKind::io, "empty trajectory CSV");
    std::vector<std::string> header;
    {
        std::stringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) header.push_back(cell);
    }
    std::vector<Index> input_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c].empty() || (header[c][0] != 'u' && header[c][0] != 'y')) {
            throw Error(ErrorKind::io, "trajectory CSV header must name channels u1.., y1..");
        }
        if (header[c][0] == 'u') input_cols.push_back(static_cast<Index>(c));
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != header.size()) throw Error(ErrorKind::io, "trajectory CSV row has the wrong width");
        rows.push_back(std::move(row));
    }
    Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(header.size()));
    for (Index t = 0; t < M.rows(); ++t) {
        for (Index c = 0; c < M.cols(); ++c) M(t, c) = rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
    }
    return Trajectory::from_external(M, input_cols);
}

std::string trajectory_to_json(const Trajectory& w) {
    json j;
    j["T"] = w.length();
    j["q"] = w.channels();
    j["m"] = w.inputs();
    j["data"] = matrix_json(w.samples());
    return j.dump() + "\n";
}

Trajectory trajectory_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        const Index T = j.at("T").get<Index>();
        const Index q = j.at("q").get<Index>();
        const Index m = j.at("m").get<Index>();
        const Matrix M = matrix_from(j.at("data"), q, "data");
        if (M.rows() != T || M.cols() != q) throw Error(ErrorKind::io, "trajectory JSON shape disagrees with T, q");
        return Trajectory(M.leftCols(m), M.rightCols(q - m));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::io, std::string("malformed trajectory JSON: ") + e.what());
    }
}

std::string model_to_json(const StateSpaceModel& model) {
    json j;
    j["A"] = matrix_json(model.A);
    j["B"] = matrix_json(model.B);
    j["C"] = matrix_json(model.C);
    j["D"] = matrix_json(model.D);
    j["order"] = model.order;
    j["lag"] = model.lag;
    return j.dump(2) + "\n";
}

StateSpaceModel model_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        StateSpaceModel s;
        s.order = j.at("order").get<Index>();
        s.lag = j.at("lag").get<Index>();
        s.A = matrix_from(j.at("A"), s.order, "A");
        s.B = matrix_from(j.at("B"), 0, "B");
        s.C = matrix_from(j.at("C"), s.order, "C");
        s.D = matrix_from(j.at("D"), s.B.cols(), "D");
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::io, std::string("malformed model JSON: ") + e.what());
    }
}

std::string lotka_volterra_to_json(const LotkaVolterraParams& p) {
    json j;
    j["a"] = p.a;
    j["b"] = p.b;
    j["c"] = p.c;
    j["d"] = p.d;
    j["dt"] = p.dt;
    j["epsilon"] = p.epsilon;
    return j.dump(2) + "\n";
}

std::string predictor_to_csv(const SpcPredictor& pred) {
    std::ostringstream os;
    for (Index i = 0; i < pred.K.rows(); ++i) {
        for (Index j = 0; j < pred.K.cols(); ++j) {
            if (j) os << ',';
            os << fmt(pred.K(i, j));
        }
        os << '\n';
    }
    return os.str();
}

std::string solution_to_json(const DeepcSolution& sol, const Regularizer& reg, double realized_cost_pct,
                             std::uint64_t seed) {
    json j;
    j["w_star"] = matrix_json(sol.w_star.samples());
    j["g_star_norm"] = sol.g_star.norm();
    j["predicted_cost"] = sol.predicted_cost;
    j["realized_cost_pct"] = realized_cost_pct;
    j["reg"] = reg.name();
    if (reg.kind == Regularizer::Kind::hybrid) {
        j["lambdas"] = {reg.lambda, reg.lambda2};
    } else {
        j["lambda"] = reg.lambda;
    }
    j["seed"] = seed;
    return j.dump(2) + "\n";
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
    f << text;
    if (!f) throw Error(ErrorKind::io, "write to '" + path.string() + "' failed");
}

}  // namespace ddctrl
