#pragma once

// Append-only event trace: one line-delimited record per simulation event,
// preceded by a versioned header. Traces are deterministic in (config,
// seed), diffable, and carry enough to replay the run without re-drawing
// randomness: every executed action appears with its consumed message and,
// for priority draws, the drawn value.

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lmx/core.hpp"
#include "lmx/network.hpp"
#include "lmx/protocol.hpp"

namespace lmx {

inline constexpr int kTraceVersion = 1;

enum class EventKind : std::uint8_t { Stage, Edge, Workload, Action, Defect };

struct SimEvent {
  EventKind kind = EventKind::Stage;
  std::int64_t stage = 0;

  // Stage
  std::int64_t round = 0;

  // Edge
  bool connected = false;
  NodeId u = -1, v = -1;
  Port port_u = -1, port_v = -1;

  // Workload / Action
  NodeId node = -1;
  bool lock_call = false;  // workload: lock vs unlock

  // Action
  ActionId action = ActionId::InitLock;
  bool has_msg = false;
  MsgKind msg_kind = MsgKind::Prepare;
  Port from_port = -1;
  // RequestLock: message priority. Win: verdict (0/1). CheckStart and a
  // losing CheckWin: the drawn priority. Otherwise -1.
  int payload = -1;

  // Defect
  std::string note;

  static SimEvent stage_boundary(std::int64_t stage, std::int64_t round) {
    SimEvent e;
    e.kind = EventKind::Stage;
    e.stage = stage;
    e.round = round;
    return e;
  }

  static SimEvent edge(std::int64_t stage, const EdgeChange& ch) {
    SimEvent e;
    e.kind = EventKind::Edge;
    e.stage = stage;
    e.connected = ch.connected;
    e.u = ch.u;
    e.v = ch.v;
    e.port_u = ch.port_u;
    e.port_v = ch.port_v;
    return e;
  }

  static SimEvent workload(std::int64_t stage, NodeId node, bool lock_call) {
    SimEvent e;
    e.kind = EventKind::Workload;
    e.stage = stage;
    e.node = node;
    e.lock_call = lock_call;
    return e;
  }

  static SimEvent defect(std::int64_t stage, std::string note) {
    SimEvent e;
    e.kind = EventKind::Defect;
    e.stage = stage;
    e.note = std::move(note);
    return e;
  }
};

inline SimEvent make_action_event(std::int64_t stage, NodeId node,
                                  const ActionExecution& exec, const ActionEffect& eff) {
  SimEvent e;
  e.kind = EventKind::Action;
  e.stage = stage;
  e.node = node;
  e.action = exec.action;
  e.has_msg = exec.has_message;
  e.from_port = exec.has_message ? exec.from_port : -1;
  if (exec.has_message) {
    e.msg_kind = exec.message.kind;
    if (exec.message.kind == MsgKind::RequestLock) e.payload = exec.message.priority;
    if (exec.message.kind == MsgKind::Win) e.payload = exec.message.verdict ? 1 : 0;
  }
  if (eff.drawn_priority >= 0) e.payload = eff.drawn_priority;
  return e;
}

inline std::string to_line(const SimEvent& e) {
  std::ostringstream os;
  switch (e.kind) {
    case EventKind::Stage:
      os << "S " << e.stage << ' ' << e.round;
      break;
    case EventKind::Edge:
      os << "E " << e.stage << ' ' << (e.connected ? '+' : '-') << ' ' << e.u << ' ' << e.v
         << ' ' << e.port_u << ' ' << e.port_v;
      break;
    case EventKind::Workload:
      os << "W " << e.stage << ' ' << e.node << ' ' << (e.lock_call ? "lock" : "unlock");
      break;
    case EventKind::Action:
      os << "A " << e.node << ' ' << to_string(e.action) << ' ' << e.from_port << ' '
         << (e.has_msg ? to_string(e.msg_kind) : "-") << ' ' << e.payload;
      break;
    case EventKind::Defect:
      os << "X " << e.stage << ' ' << e.note;
      break;
  }
  return os.str();
}

inline std::optional<SimEvent> parse_line(const std::string& line, std::int64_t cur_stage) {
  std::istringstream is(line);
  std::string tag;
  if (!(is >> tag)) return std::nullopt;
  SimEvent e;
  e.stage = cur_stage;
  if (tag == "S") {
    e.kind = EventKind::Stage;
    is >> e.stage >> e.round;
  } else if (tag == "E") {
    e.kind = EventKind::Edge;
    char sign;
    is >> e.stage >> sign >> e.u >> e.v >> e.port_u >> e.port_v;
    e.connected = sign == '+';
  } else if (tag == "W") {
    e.kind = EventKind::Workload;
    std::string which;
    is >> e.stage >> e.node >> which;
    e.lock_call = which == "lock";
  } else if (tag == "A") {
    e.kind = EventKind::Action;
    std::string action, kind;
    is >> e.node >> action >> e.from_port >> kind >> e.payload;
    auto a = action_from_string(action);
    if (!a) return std::nullopt;
    e.action = *a;
    e.has_msg = kind != "-";
    if (e.has_msg) {
      for (int k = 0; k < 8; ++k)
        if (kind == to_string(static_cast<MsgKind>(k))) e.msg_kind = static_cast<MsgKind>(k);
    }
  } else if (tag == "X") {
    e.kind = EventKind::Defect;
    is >> e.stage;
    std::getline(is, e.note);
    if (!e.note.empty() && e.note.front() == ' ') e.note.erase(0, 1);
  } else {
    return std::nullopt;
  }
  if (is.fail()) return std::nullopt;
  return e;
}

inline std::string trace_header(const std::string& canonical_config) {
  std::ostringstream os;
  os << "lmx-trace " << kTraceVersion << ' ' << canonical_config;
  return os.str();
}

// Event sink. The live loop feeds one of these; writing to a file and
// feeding the checker are both implementations.
class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void on_event(const SimEvent& e) = 0;
};

class LineSink : public TraceSink {
 public:
  explicit LineSink(std::string header) { lines_.push_back(std::move(header)); }
  void on_event(const SimEvent& e) override { lines_.push_back(to_line(e)); }
  const std::vector<std::string>& lines() const { return lines_; }
  std::string str() const {
    std::string out;
    for (const auto& l : lines_) {
      out += l;
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<std::string> lines_;
};

}  // namespace lmx
