#include "fic/log_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace fic::sim {

using nlohmann::json;

namespace {

constexpr const char* kAxes[] = {"x", "y", "z"};

std::vector<std::string> make_columns() {
  std::vector<std::string> cols{"t"};
  for (const char* prefix : {"xd", "xpd", "xppd", "xr", "err", "fcmd", "fext"})
    for (const char* a : kAxes) cols.push_back(std::string(prefix) + "_" + a);
  cols.push_back("bond_attached");
  for (const char* a : kAxes) cols.push_back(std::string("phase_") + a);
  cols.push_back("ch_m2r_inflight");
  cols.push_back("ch_r2m_inflight");
  return cols;
}

// Shortest representation that parses back to the same double.
void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void append_number(std::string& out, std::uint64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

std::vector<double> row_values(const LogRow& r) {
  std::vector<double> v{r.t};
  for (const Vec3d* vec : {&r.x_d, &r.x_prime_d, &r.x_dprime_d, &r.x_r, &r.error, &r.task_force, &r.external_force})
    for (int i = 0; i < 3; ++i) v.push_back((*vec)[i]);
  return v;
}

LogRow row_from_values(const std::vector<double>& v, bool bond, const std::array<int, 3>& phase,
                       std::uint64_t m2r, std::uint64_t r2m) {
  LogRow r;
  r.t = v[0];
  std::size_t k = 1;
  for (Vec3d* vec : {&r.x_d, &r.x_prime_d, &r.x_dprime_d, &r.x_r, &r.error, &r.task_force, &r.external_force})
    for (int i = 0; i < 3; ++i) (*vec)[i] = v[k++];
  r.bond_attached = bond;
  r.phase = phase;
  r.m2r_in_flight = m2r;
  r.r2m_in_flight = r2m;
  return r;
}

template <typename T>
T parse_cell(std::string_view cell, const std::filesystem::path& path, std::size_t line) {
  T value{};
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": bad value '" + std::string(cell) + "'");
  return value;
}

json stats_json(const net::ChannelStats& s) {
  return {{"sent", s.sent}, {"delivered", s.delivered}, {"dropped", s.dropped}, {"stale", s.stale},
          {"dead_link", s.dead_link}};
}

net::ChannelStats stats_from(const json& j) {
  net::ChannelStats s;
  s.sent = j.value("sent", std::uint64_t{0});
  s.delivered = j.value("delivered", std::uint64_t{0});
  s.dropped = j.value("dropped", std::uint64_t{0});
  s.stale = j.value("stale", std::uint64_t{0});
  s.dead_link = j.value("dead_link", std::uint64_t{0});
  return s;
}

void write_sidecar(const RunLog& log, const std::filesystem::path& path) {
  json events = json::array();
  for (const auto& e : log.events) events.push_back({{"t", e.t}, {"kind", e.kind}});
  const json meta = {{"name", log.meta.name},
                     {"config_hash", log.meta.config_hash},
                     {"seed", log.meta.seed},
                     {"version", log.meta.version},
                     {"live", log.meta.live},
                     {"rate", log.meta.rate},
                     {"delay", log.meta.delay},
                     {"saturation_error", log.meta.saturation_error},
                     {"max_force", log.meta.max_force},
                     {"aborted", log.aborted},
                     {"diagnostic", log.diagnostic},
                     {"events", events},
                     {"channel_m2r", stats_json(log.m2r_stats)},
                     {"channel_r2m", stats_json(log.r2m_stats)}};
  const auto side = sidecar_path(path);
  std::ofstream out(side);
  if (!out) throw std::runtime_error("cannot write " + side.string());
  out << meta.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + side.string());
}

void read_sidecar(RunLog& log, const std::filesystem::path& path) {
  const auto side = sidecar_path(path);
  std::ifstream in(side);
  if (!in) return;
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(side.string() + ": " + e.what());
  }
  log.meta.name = j.value("name", std::string{});
  log.meta.config_hash = j.value("config_hash", std::uint64_t{0});
  log.meta.seed = j.value("seed", std::uint64_t{0});
  log.meta.version = j.value("version", std::string(kVersion));
  log.meta.live = j.value("live", false);
  log.meta.rate = j.value("rate", 1000.0);
  log.meta.delay = j.value("delay", 0.0);
  log.meta.saturation_error = j.value("saturation_error", 0.05);
  log.meta.max_force = j.value("max_force", 20.0);
  log.aborted = j.value("aborted", false);
  log.diagnostic = j.value("diagnostic", std::string{});
  for (const auto& e : j.value("events", json::array())) log.events.push_back({e.at("t"), e.at("kind")});
  if (j.contains("channel_m2r")) log.m2r_stats = stats_from(j["channel_m2r"]);
  if (j.contains("channel_r2m")) log.r2m_stats = stats_from(j["channel_r2m"]);
}

}  // namespace

const std::vector<std::string>& log_columns() {
  static const std::vector<std::string> cols = make_columns();
  return cols;
}

LogFormat parse_log_format(const std::string& name) {
  if (name == "csv") return LogFormat::kCsv;
  if (name == "jsonl") return LogFormat::kJsonl;
  throw std::invalid_argument("unknown log format '" + name + "' (expected csv or jsonl)");
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".meta.json");
}

void export_log(const RunLog& log, const std::filesystem::path& path, LogFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto& cols = log_columns();

  if (format == LogFormat::kCsv) {
    std::string line;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) line += ',';
      line += cols[i];
    }
    out << line << '\n';
    for (const auto& r : log.rows) {
      line.clear();
      bool first = true;
      for (double v : row_values(r)) {
        if (!first) line += ',';
        first = false;
        append_number(line, v);
      }
      line += r.bond_attached ? ",1" : ",0";
      for (int p : r.phase) line += p ? ",1" : ",0";
      line += ',';
      append_number(line, r.m2r_in_flight);
      line += ',';
      append_number(line, r.r2m_in_flight);
      out << line << '\n';
    }
  } else {
    for (const auto& r : log.rows) {
      json j = json::object();
      const auto values = row_values(r);
      for (std::size_t i = 0; i < values.size(); ++i) j[cols[i]] = values[i];
      j["bond_attached"] = r.bond_attached;
      for (int i = 0; i < 3; ++i) j[std::string("phase_") + kAxes[i]] = r.phase[i];
      j["ch_m2r_inflight"] = r.m2r_in_flight;
      j["ch_r2m_inflight"] = r.r2m_in_flight;
      out << j.dump() << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
  out.close();
  write_sidecar(log, path);
}

RunLog read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  RunLog log;
  const auto& cols = log_columns();
  const std::size_t n_values = 1 + 7 * 3;
  std::string line;
  std::size_t lineno = 0;

  if (path.extension() == ".jsonl") {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
      std::vector<double> values(n_values);
      for (std::size_t i = 0; i < n_values; ++i) values[i] = j.at(cols[i]).get<double>();
      std::array<int, 3> phase{};
      for (int i = 0; i < 3; ++i) phase[i] = j.at(std::string("phase_") + kAxes[i]).get<int>();
      log.rows.push_back(row_from_values(values, j.at("bond_attached").get<bool>(), phase,
                                         j.at("ch_m2r_inflight").get<std::uint64_t>(),
                                         j.at("ch_r2m_inflight").get<std::uint64_t>()));
    }
  } else {
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    ++lineno;
    std::string expected;
    for (std::size_t i = 0; i < cols.size(); ++i) expected += (i ? "," : "") + cols[i];
    if (line != expected) throw std::runtime_error(path.string() + ": unexpected CSV header");
    std::vector<std::string_view> cells;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      cells.clear();
      std::string_view rest(line);
      while (true) {
        const auto comma = rest.find(',');
        cells.push_back(rest.substr(0, comma));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
      if (cells.size() != cols.size())
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                 std::to_string(cols.size()) + " columns");
      std::vector<double> values(n_values);
      for (std::size_t i = 0; i < n_values; ++i) values[i] = parse_cell<double>(cells[i], path, lineno);
      const bool bond = parse_cell<int>(cells[n_values], path, lineno) != 0;
      std::array<int, 3> phase{};
      for (int i = 0; i < 3; ++i) phase[i] = parse_cell<int>(cells[n_values + 1 + i], path, lineno);
      log.rows.push_back(row_from_values(values, bond, phase,
                                         parse_cell<std::uint64_t>(cells[n_values + 4], path, lineno),
                                         parse_cell<std::uint64_t>(cells[n_values + 5], path, lineno)));
    }
  }
  read_sidecar(log, path);
  return log;
}

}  // namespace fic::sim
