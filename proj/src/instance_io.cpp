#include "epw/instance_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "epw/errors.hpp"
#include "epw/oracle.hpp"

namespace epw {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_instance(const LeveledMdp& mdp, std::ostream& out) {
  const Enumeration& e = require_enumeration(mdp);
  out << "epw-mdp 1\n";
  out << "horizon " << e.horizon << "\n";
  out << "actions " << e.action_count << "\n";
  out << "features " << e.feature_dim << "\n";
  out << "initial " << e.initial_id << "\n";
  for (int h = 0; h < e.horizon; ++h) {
    for (int id : e.level_ids[static_cast<std::size_t>(h)]) {
      const State& s = e.state(id);
      out << "state " << id << ' ' << h << ' ' << static_cast<int>(s.kind);
      for (double f : s.features) out << ' ' << fmt_double(f);
      out << "\n";
    }
  }
  for (int id = 0; id < e.state_count(); ++id) {
    const auto& rows = e.transitions[static_cast<std::size_t>(id)];
    for (int a = 0; a < static_cast<int>(rows.size()); ++a) {
      const auto& row = rows[static_cast<std::size_t>(a)];
      out << "arc " << id << ' ' << a << ' ' << row.size();
      for (const TransitionEntry& tr : row)
        out << ' ' << tr.next_id << ' ' << fmt_double(tr.prob);
      out << "\n";
    }
  }
  out << "end\n";
}

void save_instance_file(const LeveledMdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open instance file for writing: " + path);
  save_instance(mdp, out);
}

TabularMdp load_instance(std::istream& in, const std::string& name) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "epw-mdp" || version != 1)
    throw ConfigError("instance file: bad magic header");

  Enumeration e;
  bool saw_end = false;
  std::string key;
  while (in >> key) {
    if (key == "horizon") {
      in >> e.horizon;
    } else if (key == "actions") {
      in >> e.action_count;
    } else if (key == "features") {
      in >> e.feature_dim;
    } else if (key == "initial") {
      in >> e.initial_id;
    } else if (key == "state") {
      int id, level, kind;
      if (!(in >> id >> level >> kind))
        throw ConfigError("instance file: malformed state record");
      if (kind < 0 || kind > 2)
        throw ConfigError("instance file: bad state kind");
      State s;
      s.id = id;
      s.level = level;
      s.kind = static_cast<StateKind>(kind);
      s.features.resize(static_cast<std::size_t>(e.feature_dim));
      for (double& f : s.features)
        if (!(in >> f)) throw ConfigError("instance file: malformed features");
      if (id != static_cast<int>(e.states.size()))
        throw ConfigError("instance file: state ids must appear in order");
      if (level < 0 || level >= e.horizon)
        throw ConfigError("instance file: state level out of range");
      if (e.level_ids.empty())
        e.level_ids.resize(static_cast<std::size_t>(e.horizon));
      e.level_ids[static_cast<std::size_t>(level)].push_back(id);
      e.states.push_back(std::move(s));
      e.transitions.emplace_back();
    } else if (key == "arc") {
      int from, action;
      std::size_t count;
      if (!(in >> from >> action >> count))
        throw ConfigError("instance file: malformed arc record");
      if (from < 0 || from >= e.state_count())
        throw ConfigError("instance file: arc from unknown state");
      if (action < 0 || action >= e.action_count)
        throw ConfigError("instance file: arc action out of range");
      auto& rows = e.transitions[static_cast<std::size_t>(from)];
      if (rows.empty()) rows.resize(static_cast<std::size_t>(e.action_count));
      auto& row = rows[static_cast<std::size_t>(action)];
      if (!row.empty()) throw ConfigError("instance file: duplicate arc");
      row.resize(count);
      for (TransitionEntry& tr : row)
        if (!(in >> tr.next_id >> tr.prob))
          throw ConfigError("instance file: malformed arc entries");
    } else if (key == "end") {
      saw_end = true;
      break;
    } else {
      throw ConfigError("instance file: unknown record '" + key + "'");
    }
  }
  if (!saw_end) throw ConfigError("instance file: missing end marker");
  if (e.level_ids.empty())
    e.level_ids.resize(static_cast<std::size_t>(e.horizon));
  // TabularMdp validates structure and probability sums.
  return TabularMdp(name, std::move(e));
}

TabularMdp load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open instance file: " + path);
  return load_instance(in, path);
}

}  // namespace epw
