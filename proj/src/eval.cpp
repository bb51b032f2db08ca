#include "vrnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace vrnet {

namespace {

double wrap_deg(double d) {
    while (d > 180.0) d -= 360.0;
    while (d <= -180.0) d += 360.0;
    return d;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

MetricReport compute_metrics(const std::vector<PairResult>& results,
                             const RecallThresholds& thresholds) {
    if (results.empty()) throw InputError("compute_metrics: no results");
    MetricReport rep;
    rep.count = static_cast<int>(results.size());
    rep.thresholds = thresholds;

    double sq_rot = 0.0, abs_rot = 0.0, sq_tr = 0.0, abs_tr = 0.0;
    std::vector<double> re_all, te_all;
    double re_succ = 0.0, te_succ = 0.0;
    int succ = 0;

    for (const PairResult& r : results) {
        EulerAnglesDeg ep = euler_from_rotation(r.pred.rotation);
        EulerAnglesDeg eg = euler_from_rotation(r.gt.rotation);
        double de[3] = {wrap_deg(ep.x - eg.x), wrap_deg(ep.y - eg.y), wrap_deg(ep.z - eg.z)};
        for (double d : de) {
            sq_rot += d * d;
            abs_rot += std::abs(d);
        }
        for (int c = 0; c < 3; ++c) {
            double d = r.pred.translation[static_cast<size_t>(c)] -
                       r.gt.translation[static_cast<size_t>(c)];
            sq_tr += d * d;
            abs_tr += std::abs(d);
        }
        double re = rotation_error_deg(r.pred.rotation, r.gt.rotation);
        double te = translation_error(r.pred.translation, r.gt.translation);
        re_all.push_back(re);
        te_all.push_back(te);
        if (re < thresholds.re_deg && te < thresholds.te) {
            ++succ;
            re_succ += re;
            te_succ += te;
        }
    }

    double axes = 3.0 * rep.count;
    rep.rmse_rot_deg = std::sqrt(sq_rot / axes);
    rep.mae_rot_deg = abs_rot / axes;
    rep.rmse_trans = std::sqrt(sq_tr / axes);
    rep.mae_trans = abs_tr / axes;

    double mean_re = 0.0, mean_te = 0.0;
    for (double v : re_all) mean_re += v;
    for (double v : te_all) mean_te += v;
    rep.re_mean_all = mean_re / rep.count;
    rep.te_mean_all = mean_te / rep.count;
    rep.re_median = median(re_all);
    rep.te_median = median(te_all);
    rep.recall = static_cast<double>(succ) / rep.count;
    rep.re_mean = succ > 0 ? re_succ / succ : std::numeric_limits<double>::quiet_NaN();
    rep.te_mean = succ > 0 ? te_succ / succ : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

std::string metric_report_json(const MetricReport& r) {
    nlohmann::json j;
    j["count"] = r.count;
    j["rmse_rot_deg"] = r.rmse_rot_deg;
    j["mae_rot_deg"] = r.mae_rot_deg;
    j["rmse_trans"] = r.rmse_trans;
    j["mae_trans"] = r.mae_trans;
    j["re_mean"] = r.re_mean;  // successful pairs only; null when recall = 0
    j["te_mean"] = r.te_mean;
    j["re_mean_all"] = r.re_mean_all;
    j["te_mean_all"] = r.te_mean_all;
    j["re_median"] = r.re_median;
    j["te_median"] = r.te_median;
    j["recall"] = r.recall;
    j["recall_threshold_re_deg"] = r.thresholds.re_deg;
    j["recall_threshold_te"] = r.thresholds.te;
    return j.dump(2) + "\n";
}

std::string metric_report_csv(const MetricReport& r) {
    std::ostringstream out;
    out << "count,rmse_rot_deg,mae_rot_deg,rmse_trans,mae_trans,re_mean,te_mean,"
           "re_mean_all,te_mean_all,re_median,te_median,recall\n";
    out.precision(17);
    out << r.count << ',' << r.rmse_rot_deg << ',' << r.mae_rot_deg << ',' << r.rmse_trans << ','
        << r.mae_trans << ',' << r.re_mean << ',' << r.te_mean << ',' << r.re_mean_all << ','
        << r.te_mean_all << ',' << r.re_median << ',' << r.te_median << ',' << r.recall << '\n';
    return out.str();
}

}  // namespace vrnet
