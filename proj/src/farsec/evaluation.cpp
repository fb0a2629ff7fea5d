#include "farsec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "farsec/config.hpp"
#include "farsec/error.hpp"

namespace farsec::eval {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct CsvTable {
  std::map<std::string, std::size_t> columns;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> col(const std::string& name) const {
    auto it = columns.find(name);
    if (it == columns.end()) return std::nullopt;
    return it->second;
  }
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SourceUnavailable, "cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::UnsupportedFormat, "empty CSV " + path.string());
  const auto header = split_csv(line);
  for (std::size_t i = 0; i < header.size(); ++i) table.columns[header[i]] = i;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto row = split_csv(line);
    if (row.size() != header.size())
      throw Error(ErrorCode::UnsupportedFormat, path.string() + ": row has " + std::to_string(row.size()) +
                                                    " cells, header has " + std::to_string(header.size()));
    table.rows.push_back(std::move(row));
  }
  return table;
}

double to_double(const std::string& s, const fs::path& path) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": not a number '" + s + "'");
  }
}

std::string key_of(const std::string& video, const std::string& id) { return video + '\x1f' + id; }

std::string fixed2(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << v;
  return ss.str();
}

}  // namespace

ErrorSet per_vehicle_errors(std::span<const TruthSpeed> truth, std::span<const PredictedSpeed> predictions) {
  std::map<std::string, const TruthSpeed*> by_key;
  for (const auto& t : truth) by_key[key_of(t.video_id, t.vehicle_id)] = &t;
  std::map<std::string, bool> covered;
  ErrorSet out;
  for (const auto& p : predictions) {
    auto it = by_key.find(key_of(p.video_id, p.vehicle_id));
    if (it == by_key.end())
      throw Error(ErrorCode::UnknownVehicle, "prediction for unknown vehicle " + p.video_id + "/" + p.vehicle_id);
    const TruthSpeed& t = *it->second;
    if (!(t.v_true_kmh > 0.0))
      throw Error(ErrorCode::InvalidParameter, "true speed must be positive for vehicle " + t.vehicle_id);
    ErrorRecord r;
    r.vehicle_id = p.vehicle_id;
    r.video_id = p.video_id;
    r.abs_err = std::abs(p.v_pred_kmh - t.v_true_kmh);
    r.rel_err = 100.0 * r.abs_err / t.v_true_kmh;
    out.records.push_back(std::move(r));
    covered[it->first] = true;
  }
  for (const auto& t : truth) {
    if (!covered.count(key_of(t.video_id, t.vehicle_id))) out.uncovered.push_back(t);
  }
  return out;
}

Stats summarize(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyEvaluation, "no error records");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  Stats s;
  s.support = n;
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  s.median = sorted[(n - 1) / 2];
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n) - 1e-9));
  s.p95 = sorted[std::clamp<std::size_t>(rank, 1, n) - 1];
  s.worst = sorted.back();
  return s;
}

EvaluationTable aggregate(std::span<const ErrorRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyEvaluation, "no error records");
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  std::vector<double> all_abs, all_rel;
  for (const auto& r : records) {
    auto [it, inserted] = groups.try_emplace(r.video_id);
    if (inserted) order.push_back(r.video_id);
    it->second.first.push_back(r.abs_err);
    it->second.second.push_back(r.rel_err);
    all_abs.push_back(r.abs_err);
    all_rel.push_back(r.rel_err);
  }
  EvaluationTable table;
  for (const auto& video : order) {
    const auto& [abs, rel] = groups[video];
    table.per_video.push_back({video, summarize(abs), summarize(rel)});
  }
  table.total = {"TOTAL", summarize(all_abs), summarize(all_rel)};
  return table;
}

std::vector<HistogramBin> cumulative_histogram(std::span<const double> values, double bin_width) {
  if (!(bin_width > 0.0)) throw Error(ErrorCode::InvalidParameter, "bin width must be positive");
  if (values.empty()) throw Error(ErrorCode::EmptyEvaluation, "no error records");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(sorted.back() / bin_width)));
  std::vector<HistogramBin> out;
  out.reserve(bins);
  std::size_t pos = 0;
  for (std::size_t k = 1; k <= bins; ++k) {
    const double upper = static_cast<double>(k) * bin_width;
    while (pos < sorted.size() && sorted[pos] <= upper) ++pos;
    out.push_back({upper, pos});
  }
  out.back().cumulative_count = sorted.size();
  return out;
}

std::vector<PredictedSpeed> predictions_from_reports(std::span<const TruthSpeed> truth,
                                                     std::span<const SpeedReport> reports, double fps) {
  if (!(fps > 0.0)) throw Error(ErrorCode::InvalidParameter, "fps must be positive");
  std::vector<const SpeedReport*> usable;
  for (const auto& r : reports)
    if (r.v_star_kmh) usable.push_back(&r);
  std::stable_sort(usable.begin(), usable.end(), [](const auto* a, const auto* b) { return a->t < b->t; });

  std::vector<PredictedSpeed> out;
  for (const auto& t : truth) {
    if (t.last_frame < 0 || t.direction == Direction::Unknown) continue;
    const double t_last = static_cast<double>(t.last_frame) / fps;
    const SpeedReport* after = nullptr;
    const SpeedReport* before = nullptr;
    for (const auto* r : usable) {
      if (r->direction != t.direction) continue;
      if (r->t + 1e-9 >= t_last) {
        after = r;
        break;
      }
      before = r;
    }
    const SpeedReport* chosen = after ? after : before;
    if (chosen) out.push_back({t.video_id, t.vehicle_id, *chosen->v_star_kmh});
  }
  return out;
}

std::vector<TruthSpeed> read_truth_csv(const fs::path& path, const std::string& default_video) {
  const CsvTable table = read_csv(path);
  const auto id = table.col("car_id");
  const auto speed = table.col("speed_kmh");
  if (!id || !speed) throw Error(ErrorCode::UnsupportedFormat, path.string() + ": need car_id and speed_kmh columns");
  const auto video = table.col("video");
  const auto dir = table.col("direction");
  const auto first = table.col("first_frame");
  const auto last = table.col("last_frame");
  std::vector<TruthSpeed> out;
  for (const auto& row : table.rows) {
    TruthSpeed t;
    t.video_id = video ? row[*video] : default_video;
    t.vehicle_id = row[*id];
    t.v_true_kmh = to_double(row[*speed], path);
    if (dir) t.direction = direction_from_string(row[*dir]);
    if (first) t.first_frame = std::stoll(row[*first]);
    if (last) t.last_frame = std::stoll(row[*last]);
    out.push_back(std::move(t));
  }
  return out;
}

PredictionInput read_predictions(const fs::path& path, const std::string& default_video) {
  PredictionInput input;
  {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::SourceUnavailable, "cannot open " + path.string());
    std::string line;
    while (std::getline(in, line) && line.empty()) {
    }
    if (!line.empty() && line[0] == '{') {
      input.is_report_stream = true;
      do {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw Error(ErrorCode::UnsupportedFormat, path.string() + ": malformed JSON line");
        SpeedReport r;
        r.t = j.at("t").get<double>();
        r.direction = direction_from_string(j.at("direction").get<std::string>());
        if (!j.at("v_star_kmh").is_null()) r.v_star_kmh = j.at("v_star_kmh").get<double>();
        r.vehicle_count = j.at("count").get<std::size_t>();
        r.window_s = j.value("window_s", 60.0);
        r.epoch = j.value("epoch", std::int64_t{0});
        input.reports.push_back(r);
      } while (std::getline(in, line));
      return input;
    }
  }
  const CsvTable table = read_csv(path);
  if (auto v = table.col("v_star_kmh")) {
    input.is_report_stream = true;
    const auto t = table.col("t"), dir = table.col("direction"), count = table.col("count"),
               window = table.col("window_s"), epoch = table.col("epoch");
    if (!t || !dir) throw Error(ErrorCode::UnsupportedFormat, path.string() + ": report CSV needs t and direction");
    for (const auto& row : table.rows) {
      SpeedReport r;
      r.t = to_double(row[*t], path);
      r.direction = direction_from_string(row[*dir]);
      if (!row[*v].empty()) r.v_star_kmh = to_double(row[*v], path);
      if (count) r.vehicle_count = std::stoul(row[*count]);
      if (window) r.window_s = to_double(row[*window], path);
      if (epoch) r.epoch = std::stoll(row[*epoch]);
      input.reports.push_back(r);
    }
    return input;
  }
  const auto id = table.col("car_id");
  const auto speed = table.col("speed_kmh");
  if (!id || !speed)
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": need car_id,speed_kmh or a report stream");
  const auto video = table.col("video");
  for (const auto& row : table.rows)
    input.per_vehicle.push_back({video ? row[*video] : default_video, row[*id], to_double(row[*speed], path)});
  return input;
}

void write_tables(const EvaluationResult& result, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  auto write_stats = [&](const fs::path& path, bool rel, bool total_only) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << "video,support,mean,median,p95,worst\n";
    auto row = [&](const VideoStats& v) {
      const Stats& s = rel ? v.rel : v.abs;
      out << v.video_id << ',' << s.support << ',' << fixed2(s.mean) << ',' << fixed2(s.median) << ','
          << fixed2(s.p95) << ',' << fixed2(s.worst) << '\n';
    };
    if (!total_only)
      for (const auto& v : result.table.per_video) row(v);
    else
      row(result.table.total);
  };
  write_stats(out_dir / "per_video.csv", false, false);
  write_stats(out_dir / "per_video_rel.csv", true, false);
  write_stats(out_dir / "total.csv", false, true);

  std::vector<double> abs;
  for (const auto& r : result.errors.records) abs.push_back(r.abs_err);
  std::ofstream cum(out_dir / "cumulative.csv");
  cum << "bin_upper_kmh,cumulative_count\n";
  for (const auto& b : cumulative_histogram(abs, 1.0)) cum << format_number(b.upper) << ',' << b.cumulative_count << '\n';

  std::ofstream unc(out_dir / "uncovered.csv");
  unc << "video,car_id,speed_kmh\n";
  for (const auto& t : result.errors.uncovered)
    unc << t.video_id << ',' << t.vehicle_id << ',' << format_number(t.v_true_kmh) << '\n';
}

EvaluationResult run_evaluation(const fs::path& gt_path, const fs::path& pred_path, const fs::path& out_dir,
                                std::optional<double> fps, const std::string& default_video) {
  const auto truth = read_truth_csv(gt_path, default_video);
  const auto input = read_predictions(pred_path, default_video);
  std::vector<PredictedSpeed> predictions = input.per_vehicle;
  if (input.is_report_stream) {
    if (!fps) {
      // The simulator records the frame rate next to its ground truth.
      const fs::path info = gt_path.parent_path() / "scene_info.txt";
      if (fs::exists(info)) {
        for (const auto& [k, v] : read_key_values(info))
          if (k == "fps") fps = std::stod(v);
      }
    }
    predictions = predictions_from_reports(truth, input.reports, fps.value_or(30.0));
  }
  EvaluationResult result;
  result.errors = per_vehicle_errors(truth, predictions);
  result.table = aggregate(result.errors.records);
  write_tables(result, out_dir);
  return result;
}

}  // namespace farsec::eval
