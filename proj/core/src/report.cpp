#include "linkdrift/report.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "linkdrift/errors.hpp"
#include "linkdrift/io.hpp"

namespace linkdrift {

using nlohmann::json;

namespace {

json curves_to_json(const CumulativeCurves& c) { return {{"cum_rmse", c.rmse}, {"cum_mape", c.mape}}; }

CumulativeCurves curves_from_json(const json& j) {
  return {j.at("cum_rmse").get<std::vector<double>>(), j.at("cum_mape").get<std::vector<double>>()};
}

std::string tconv_cell(const std::optional<int>& v) { return v ? std::to_string(*v) : "not_converged"; }

}  // namespace

std::string scenario_result_to_json(const ScenarioResult& r) {
  json j;
  j["scenario"] = r.report.scenario;
  j["failed"] = r.failed;
  j["inspected"] = r.inspected;
  j["failure_step"] = r.failure_step;
  j["total_load_tbps"] = r.total_load_tbps;
  j["seed"] = r.seed;
  j["horizon"] = r.horizon;
  const auto& im = r.report.impact;
  j["impact"] = {{"class", to_string(im.cls)}, {"mean_pre", im.mean_pre}, {"mean_post", im.mean_post},
                 {"change", im.change}};
  j["approaches"] = json::array();
  for (const auto& a : r.report.approaches) {
    json ja;
    ja["name"] = a.approach;
    ja["curves"] = curves_to_json(a.curves);
    ja["tconv"] = json::array();
    for (const auto& [key, v] : a.tconv)
      ja["tconv"].push_back({{"th", key.first}, {"x", key.second}, {"tconv", v ? json(*v) : json(nullptr)}});
    j["approaches"].push_back(ja);
  }
  j["warm_mape"] = r.warm_mape;
  j["post_failure_refits"] = r.post_failure_refits;
  j["train_mse"] = r.train_mse;
  j["stream_hash"] = r.stream_hash;
  const auto& k = r.counters;
  j["counters"] = {{"allocated", k.allocated},
                   {"rejected", k.rejected},
                   {"expired", k.expired},
                   {"failed_affected", k.failed_affected},
                   {"restored", k.restored},
                   {"restoration_rejected", k.restoration_rejected},
                   {"rejected_before_failure", k.rejected_before_failure}};
  return j.dump(1) + "\n";
}

ScenarioResult scenario_result_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    ScenarioResult r;
    r.report.scenario = j.at("scenario");
    r.failed = j.at("failed");
    r.inspected = j.at("inspected");
    r.failure_step = j.at("failure_step");
    r.total_load_tbps = j.at("total_load_tbps");
    r.seed = j.at("seed");
    r.horizon = j.at("horizon");
    const auto& im = j.at("impact");
    r.report.impact.cls = impact_class_from_string(im.at("class"));
    r.report.impact.mean_pre = im.at("mean_pre");
    r.report.impact.mean_post = im.at("mean_post");
    r.report.impact.change = im.at("change");
    for (const auto& ja : j.at("approaches")) {
      ApproachResult a;
      a.approach = ja.at("name");
      a.curves = curves_from_json(ja.at("curves"));
      for (const auto& t : ja.at("tconv")) {
        std::optional<int> v;
        if (!t.at("tconv").is_null()) v = t.at("tconv").get<int>();
        a.tconv[{t.at("th").get<double>(), t.at("x").get<int>()}] = v;
      }
      r.report.approaches.push_back(std::move(a));
    }
    r.warm_mape = j.at("warm_mape").get<std::map<std::string, double>>();
    r.post_failure_refits = j.at("post_failure_refits").get<std::map<std::string, std::size_t>>();
    r.train_mse = j.at("train_mse").get<std::map<std::string, double>>();
    r.stream_hash = j.at("stream_hash");
    const auto& k = j.at("counters");
    r.counters.allocated = k.at("allocated");
    r.counters.rejected = k.at("rejected");
    r.counters.expired = k.at("expired");
    r.counters.failed_affected = k.at("failed_affected");
    r.counters.restored = k.at("restored");
    r.counters.restoration_rejected = k.at("restoration_rejected");
    r.counters.rejected_before_failure = k.at("rejected_before_failure");
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed scenario report: ") + e.what());
  }
}

std::map<std::pair<std::string, std::string>, ClassCurves> aggregate_class_curves(
    const std::vector<ScenarioResult>& results) {
  std::map<std::pair<std::string, std::string>, ClassCurves> out;
  for (const auto& r : results) {
    for (const auto& a : r.report.approaches) {
      auto& agg = out[{to_string(r.report.impact.cls), a.approach}];
      if (agg.members == 0) {
        agg.curves = a.curves;
      } else {
        if (agg.curves.rmse.size() != a.curves.rmse.size())
          throw Error("cannot aggregate curves of different horizons");
        for (std::size_t t = 0; t < a.curves.rmse.size(); ++t) {
          agg.curves.rmse[t] += a.curves.rmse[t];
          agg.curves.mape[t] += a.curves.mape[t];
        }
      }
      ++agg.members;
    }
  }
  for (auto& [key, agg] : out) {
    if (agg.members == 1) continue;
    const auto m = static_cast<double>(agg.members);
    for (auto& v : agg.curves.rmse) v /= m;
    for (auto& v : agg.curves.mape) v /= m;
  }
  return out;
}

std::string aggregate_curves_csv(const std::vector<ScenarioResult>& results) {
  std::string out = "class,approach,step,scenarios,cum_rmse,cum_mape\n";
  for (const auto& [key, agg] : aggregate_class_curves(results))
    for (std::size_t t = 0; t < agg.curves.rmse.size(); ++t)
      out += key.first + "," + key.second + "," + std::to_string(t) + "," + std::to_string(agg.members) + "," +
             format_double(agg.curves.rmse[t]) + "," + format_double(agg.curves.mape[t]) + "\n";
  return out;
}

std::string tconv_table_csv(const std::vector<ScenarioResult>& results) {
  std::string out = "th,x,approach";
  for (const auto& r : results) out += "," + r.report.scenario;
  out += "\n";
  // Row order: th ascending, approaches in the order of the first report.
  std::set<std::pair<double, int>> keys;
  for (const auto& r : results)
    for (const auto& a : r.report.approaches)
      for (const auto& [k, v] : a.tconv) keys.insert(k);
  std::vector<std::string> approaches;
  for (const auto& r : results)
    for (const auto& a : r.report.approaches)
      if (std::find(approaches.begin(), approaches.end(), a.approach) == approaches.end())
        approaches.push_back(a.approach);
  for (const auto& k : keys) {
    for (const auto& name : approaches) {
      out += format_double(k.first) + "," + std::to_string(k.second) + "," + name;
      for (const auto& r : results) {
        std::string cell = "";
        for (const auto& a : r.report.approaches) {
          if (a.approach != name) continue;
          auto it = a.tconv.find(k);
          if (it != a.tconv.end()) cell = tconv_cell(it->second);
        }
        out += "," + cell;
      }
      out += "\n";
    }
  }
  return out;
}

void write_scenario_report(const ScenarioResult& r, const std::filesystem::path& dir) {
  write_curves_csv(r.report, dir / "curves.csv");
  write_tconv_csv(r.report, dir / "tconv.csv");
  write_text_file(dir / "report.json", scenario_result_to_json(r));
}

void emit_report(const std::vector<ScenarioResult>& results, const std::filesystem::path& out_dir) {
  if (results.empty()) throw PreconditionError("emit_report: no scenario reports");
  for (const auto& r : results) write_scenario_report(r, out_dir / r.report.scenario);
  write_text_file(out_dir / "aggregate_curves.csv", aggregate_curves_csv(results));
  write_text_file(out_dir / "tconv_table.csv", tconv_table_csv(results));
}

std::vector<ScenarioResult> load_results(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(dir.string() + ": not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_directory() && std::filesystem::exists(e.path() / "report.json")) files.push_back(e.path() / "report.json");
  std::sort(files.begin(), files.end());
  std::vector<ScenarioResult> out;
  for (const auto& f : files) out.push_back(scenario_result_from_json(read_text_file(f)));
  return out;
}

}  // namespace linkdrift
