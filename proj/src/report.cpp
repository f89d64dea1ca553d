#include "nslab/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace nslab {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

nlohmann::ordered_json to_json(const Vec& v) {
    auto a = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::isfinite(v[i]))
            a.push_back(v[i]);
        else
            a.push_back(nullptr);
    }
    return a;
}

nlohmann::ordered_json to_json(const Mat& m) {
    auto a = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(to_json(Vec(m.row(r).transpose())));
    return a;
}

nlohmann::ordered_json residual_report_json(const ResidualReport& r, std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["max_weakA"] = r.max_weakA;
    j["max_weakB"] = r.max_weakB;
    j["max_addSym"] = r.max_addSym;
    j["max_addProj"] = r.max_addProj;
    auto pts = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < r.points.size(); ++k) {
        const auto& pr = r.points[k];
        nlohmann::ordered_json e;
        e["point"] = k;
        e["x"] = to_json(pr.point.x);
        e["p"] = to_json(pr.point.p);
        e["weakA"] = to_json(pr.weak.weakA);
        e["weakB"] = to_json(pr.weak.weakB);
        e["weakB_printed"] = to_json(pr.weak.weakB_printed);
        e["norm_weakA"] = max_abs(pr.weak.weakA);
        e["norm_weakB"] = max_abs(pr.weak.weakB);
        if (pr.has_additional) {
            e["addSym"] = to_json(pr.additional.addSym);
            e["B"] = to_json(pr.additional.opB.B);
            e["lambda_B"] = pr.additional.opB.lambda_B;
            e["addProj"] = to_json(pr.additional.addProj);
            e["norm_addSym"] = max_abs(pr.additional.addSym);
            e["norm_addProj"] = max_abs(pr.additional.addProj);
        }
        pts.push_back(std::move(e));
    }
    j["points"] = std::move(pts);
    return j;
}

std::string residual_report_csv(const ResidualReport& r) {
    std::ostringstream out;
    out << "point,weakA,weakB,addSym,addProj\n";
    for (std::size_t k = 0; k < r.points.size(); ++k) {
        const auto& pr = r.points[k];
        out << k << ',' << format_double(max_abs(pr.weak.weakA)) << ',' << format_double(max_abs(pr.weak.weakB))
            << ',';
        if (pr.has_additional)
            out << format_double(max_abs(pr.additional.addSym)) << ','
                << format_double(max_abs(pr.additional.addProj));
        else
            out << ',';
        out << '\n';
    }
    return out.str();
}

std::string nu_field_csv(const NuField& f) {
    std::ostringstream out;
    out << "node";
    for (int i = 1; i <= f.grid.axes(); ++i) out << ",y" << i;
    out << ",nu\n";
    for (std::size_t k = 0; k < f.nu.size(); ++k) {
        Vec y = f.grid.node(k);
        out << k;
        for (Eigen::Index i = 0; i < y.size(); ++i) out << ',' << format_double(y[i]);
        out << ',' << format_double(f.nu[k]) << '\n';
    }
    return out.str();
}

std::string shift_csv(const ShiftFamily& s) {
    std::ostringstream out;
    s.write_csv(out);
    return out.str();
}

} // namespace nslab
