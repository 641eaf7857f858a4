// SPDX-License-Identifier: Apache-2.0
/**
 * @file   io.hpp
 * @brief  Artifact files: atomic writes, the CRP text format and the PUF
 *         realization JSON.
 *
 * CRP file (bit-exact):
 *
 *   # mvlpuf crp v1
 *   # puf_seed=<u64> sigma=<decimal> cal_seed=<u64> gen_seed=<u64> count=<n>
 *   XXXXXX,YYYYYY\n            (six uppercase hex digits each)
 *
 * Any other line starting with '#' is a comment and is ignored on read.
 */
#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "json.hpp"

#include "mvlpuf/error.hpp"
#include "mvlpuf/puf.hpp"

namespace mvlpuf::io {

namespace fs = std::filesystem;

/// Writes via a sibling temp file and rename, so readers never see a
/// partially written artifact.
inline void write_file_atomic(const fs::path &path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out)
      throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename onto " + path.string());
  }
}

inline std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{})
    throw InvalidArgument("cannot format double");
  return std::string(buf, end);
}

inline std::string format_crp_line(const puf::Crp &crp) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06X,%06X\n", crp.challenge, crp.response);
  return buf;
}

inline std::string format_dataset(const puf::CrpDataset &ds) {
  std::string out = "# mvlpuf crp v1\n";
  out += "# puf_seed=" + std::to_string(ds.puf_seed) +
         " sigma=" + format_double(ds.sigma) +
         " cal_seed=" + std::to_string(ds.cal_seed) +
         " gen_seed=" + std::to_string(ds.generation_seed) +
         " count=" + std::to_string(ds.crps.size()) + "\n";
  out.reserve(out.size() + 14 * ds.crps.size());
  for (const puf::Crp &c : ds.crps)
    out += format_crp_line(c);
  return out;
}

inline void write_dataset(const puf::CrpDataset &ds, const fs::path &path) {
  write_file_atomic(path, format_dataset(ds));
}

namespace detail {

inline bool parse_hex6(std::string_view s, std::uint32_t &out) {
  if (s.size() != 6)
    return false;
  std::uint32_t v = 0;
  for (char c : s) {
    int d;
    if (c >= '0' && c <= '9')
      d = c - '0';
    else if (c >= 'A' && c <= 'F')
      d = c - 'A' + 10;
    else
      return false;
    v = (v << 4) | static_cast<std::uint32_t>(d);
  }
  out = v;
  return true;
}

template <typename T> bool parse_number(std::string_view s, T &out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

} // namespace detail

inline puf::CrpDataset parse_dataset(std::string_view text) {
  puf::CrpDataset ds;
  ds.sigma = 0.0;
  puf::ChallengeSet seen;
  std::size_t line_no = 0;
  std::optional<std::size_t> declared_count;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos)
      throw ParseError(line_no, "missing trailing newline");
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;

    if (!line.empty() && line.front() == '#') {
      if (line.rfind("# puf_seed=", 0) != 0)
        continue;
      std::istringstream fields{std::string(line.substr(2))};
      std::string kv;
      while (fields >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw ParseError(line_no, "malformed header field '" + kv + "'");
        const std::string_view key(kv.data(), eq);
        const std::string_view val(kv.data() + eq + 1, kv.size() - eq - 1);
        bool ok = true;
        if (key == "puf_seed")
          ok = detail::parse_number(val, ds.puf_seed);
        else if (key == "sigma")
          ok = detail::parse_number(val, ds.sigma);
        else if (key == "cal_seed")
          ok = detail::parse_number(val, ds.cal_seed);
        else if (key == "gen_seed")
          ok = detail::parse_number(val, ds.generation_seed);
        else if (key == "count") {
          std::size_t n = 0;
          ok = detail::parse_number(val, n);
          declared_count = n;
        } else
          throw ParseError(line_no, "unknown header field '" + std::string(key) + "'");
        if (!ok)
          throw ParseError(line_no, "bad value for '" + std::string(key) + "'");
      }
      continue;
    }

    puf::Crp crp;
    if (line.size() != 13 || line[6] != ',' ||
        !detail::parse_hex6(line.substr(0, 6), crp.challenge) ||
        !detail::parse_hex6(line.substr(7, 6), crp.response))
      throw ParseError(line_no, "expected XXXXXX,YYYYYY (uppercase hex), got '" +
                                    std::string(line) + "'");
    if (!seen.insert(crp.challenge))
      throw ParseError(line_no, "duplicate challenge " + std::string(line.substr(0, 6)));
    ds.crps.push_back(crp);
  }
  if (declared_count && *declared_count != ds.crps.size())
    throw ParseError(line_no, "header declares " + std::to_string(*declared_count) +
                                  " CRPs, file holds " + std::to_string(ds.crps.size()));
  return ds;
}

inline puf::CrpDataset read_dataset(const fs::path &path) {
  return parse_dataset(read_file(path));
}

// --- PUF realization JSON -------------------------------------------------

using nlohmann::json;

inline json to_json(const puf::PufRealization &p) {
  json cells = json::array();
  for (const puf::CellParams &c : p.cells) {
    json wgs = json::array(), tcs = json::array(), sws = json::array();
    for (const auto &w : c.waveguides)
      wgs.push_back({{"theta", w.theta}, {"phi_te", w.phi_te}, {"phi_tm", w.phi_tm}});
    for (const auto &t : c.couplers)
      tcs.push_back({{"rho_te", t.rho_te},
                     {"rho_tm", t.rho_tm},
                     {"delta_te", t.delta_te},
                     {"delta_tm", t.delta_tm},
                     {"kappa", t.kappa}});
    for (const auto &s : c.switches)
      sws.push_back({{"axis", s.axis}, {"retardance", s.retardance}});
    json cell = {{"input", {{"a_te", c.input.a_te}, {"a_tm", c.input.a_tm}}},
                 {"waveguides", wgs},
                 {"couplers", tcs},
                 {"switches", sws},
                 {"output", {{"a_te", c.output.a_te}, {"a_tm", c.output.a_tm}}}};
    cell["threshold"] = c.calibrated() ? json(c.threshold) : json(nullptr);
    cells.push_back(std::move(cell));
  }
  return {{"format", "mvlpuf-puf/1"},
          {"seed", p.seed},
          {"sigma", p.sigma},
          {"coupling_min", p.coupling_min},
          {"coupling_max", p.coupling_max},
          {"cal_seed", p.cal_seed},
          {"n_cal", p.n_cal},
          {"cells", cells}};
}

inline puf::PufRealization puf_from_json(const json &j) {
  try {
    if (j.at("format").get<std::string>() != "mvlpuf-puf/1")
      throw IoError("unsupported PUF file format");
    puf::PufRealization p;
    p.seed = j.at("seed").get<std::uint64_t>();
    p.sigma = j.at("sigma").get<double>();
    p.coupling_min = j.at("coupling_min").get<double>();
    p.coupling_max = j.at("coupling_max").get<double>();
    p.cal_seed = j.at("cal_seed").get<std::uint64_t>();
    p.n_cal = j.at("n_cal").get<int>();
    for (const json &jc : j.at("cells")) {
      puf::CellParams c;
      c.input = {jc.at("input").at("a_te").get<double>(),
                 jc.at("input").at("a_tm").get<double>()};
      c.output = {jc.at("output").at("a_te").get<double>(),
                  jc.at("output").at("a_tm").get<double>()};
      const json &wgs = jc.at("waveguides");
      const json &tcs = jc.at("couplers");
      const json &sws = jc.at("switches");
      if (wgs.size() != c.waveguides.size() || tcs.size() != c.couplers.size() ||
          sws.size() != c.switches.size())
        throw IoError("cell has the wrong number of components");
      for (std::size_t i = 0; i < c.waveguides.size(); ++i)
        c.waveguides[i] = {wgs[i].at("theta").get<double>(),
                           wgs[i].at("phi_te").get<double>(),
                           wgs[i].at("phi_tm").get<double>()};
      for (std::size_t i = 0; i < c.couplers.size(); ++i)
        c.couplers[i] = {tcs[i].at("rho_te").get<double>(),
                         tcs[i].at("rho_tm").get<double>(),
                         tcs[i].at("delta_te").get<double>(),
                         tcs[i].at("delta_tm").get<double>(),
                         tcs[i].at("kappa").get<double>()};
      for (std::size_t i = 0; i < c.switches.size(); ++i)
        c.switches[i] = {sws[i].at("axis").get<double>(),
                         sws[i].at("retardance").get<double>()};
      const json &th = jc.at("threshold");
      if (!th.is_null())
        c.threshold = th.get<double>();
      p.cells.push_back(c);
    }
    if (p.cells.size() != static_cast<std::size_t>(puf::kCells))
      throw IoError("PUF file must describe exactly 24 cells");
    return p;
  } catch (const json::exception &e) {
    throw IoError(std::string("malformed PUF file: ") + e.what());
  }
}

inline void write_puf(const puf::PufRealization &p, const fs::path &path,
                      const json &config = json::object()) {
  json j = to_json(p);
  if (!config.empty())
    j["config"] = config;
  write_file_atomic(path, j.dump(2) + "\n");
}

inline puf::PufRealization read_puf(const fs::path &path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception &e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return puf_from_json(j);
}

} // namespace mvlpuf::io
