#include "bsv/config.hpp"

#include "bsv/csv_io.hpp"
#include "bsv/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

namespace bsv
{

namespace
{

namespace pt = boost::property_tree;

struct Key
{
  std::string section; // empty: top level
  std::string name;
  std::function<std::string(RunConfig&)> get;
  // Returns an error message, empty on success.
  std::function<std::string(RunConfig&, const std::string&)> set;
};

std::string trim(std::string s)
{
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

template <typename Access>
Key real_key(std::string section, std::string name, Access acc)
{
  return {std::move(section), std::move(name),
          [acc](RunConfig& c) { return format_double(acc(c)); },
          [acc](RunConfig& c, const std::string& v) -> std::string {
            const auto d = parse_double(v);
            if (!d)
              return "expected a number, got '" + v + "'";
            acc(c) = *d;
            return {};
          }};
}

template <typename Access>
Key count_key(std::string section, std::string name, Access acc)
{
  return {std::move(section), std::move(name),
          [acc](RunConfig& c) { return std::to_string(acc(c)); },
          [acc](RunConfig& c, const std::string& v) -> std::string {
            unsigned long long n = 0;
            const auto res = std::from_chars(v.data(), v.data() + v.size(), n);
            if (res.ec != std::errc() || res.ptr != v.data() + v.size())
              return "expected a non-negative integer, got '" + v + "'";
            acc(c) = static_cast<std::remove_reference_t<decltype(acc(c))>>(n);
            return {};
          }};
}

const std::vector<Key>& keys()
{
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back({"", "mode", [](RunConfig& c) { return to_string(c.mode); },
                 [](RunConfig& c, const std::string& v) -> std::string {
                   try {
                     c.mode = mode_from_string(v);
                   } catch (const ValidationError& e) {
                     return e.what();
                   }
                   return {};
                 }});
    k.push_back(count_key("", "seed", [](RunConfig& c) -> std::uint64_t& { return c.seed; }));
    k.push_back({"", "output_dir", [](RunConfig& c) { return c.output_dir; },
                 [](RunConfig& c, const std::string& v) -> std::string {
                   c.output_dir = v;
                   return {};
                 }});
    k.push_back(count_key("", "workers", [](RunConfig& c) -> std::size_t& { return c.workers; }));
    k.push_back(real_key("", "t_i", [](RunConfig& c) -> double& { return c.t_i; }));
    k.push_back(real_key("", "t_span", [](RunConfig& c) -> double& { return c.t_span; }));
    k.push_back(count_key("", "n_time_samples",
                          [](RunConfig& c) -> std::size_t& { return c.n_time_samples; }));

    k.push_back(real_key("squeezing", "r", [](RunConfig& c) -> double& { return c.squeezing.r; }));
    k.push_back(
      real_key("squeezing", "phi", [](RunConfig& c) -> double& { return c.squeezing.phi; }));
    k.push_back(
      real_key("squeezing", "omega", [](RunConfig& c) -> double& { return c.squeezing.omega; }));
    k.push_back(real_key("squeezing", "field_scale",
                         [](RunConfig& c) -> double& { return c.squeezing.field_scale; }));

    k.push_back(
      real_key("barrier", "delta_u", [](RunConfig& c) -> double& { return c.barrier.delta_u; }));
    k.push_back(real_key("barrier", "mass", [](RunConfig& c) -> double& { return c.barrier.mass; }));
    k.push_back(
      real_key("barrier", "charge", [](RunConfig& c) -> double& { return c.barrier.charge; }));
    k.push_back(real_key("barrier", "gap_length",
                         [](RunConfig& c) -> double& { return c.barrier.gap_length; }));

    k.push_back({"quadrature", "method",
                 [](RunConfig& c) {
                   return std::string(c.quadrature.method == QuadratureSpec::Method::adaptive
                                        ? "adaptive"
                                        : "fixed_gauss");
                 },
                 [](RunConfig& c, const std::string& v) -> std::string {
                   if (v == "adaptive")
                     c.quadrature.method = QuadratureSpec::Method::adaptive;
                   else if (v == "fixed_gauss")
                     c.quadrature.method = QuadratureSpec::Method::fixed_gauss;
                   else
                     return "method must be adaptive or fixed_gauss, got '" + v + "'";
                   return {};
                 }});
    k.push_back(real_key("quadrature", "x_min_sigmas",
                         [](RunConfig& c) -> double& { return c.quadrature.x_min_sigmas; }));
    k.push_back(count_key("quadrature", "n_nodes",
                          [](RunConfig& c) -> std::size_t& { return c.quadrature.n_nodes; }));
    k.push_back(real_key("quadrature", "rel_tol",
                         [](RunConfig& c) -> double& { return c.quadrature.rel_tol; }));

    k.push_back({"contour", "shape",
                 [](RunConfig& c) {
                   return std::string(c.contour.shape == ContourSpec::Shape::vertical_then_real
                                        ? "vertical_then_real"
                                        : "straight_line");
                 },
                 [](RunConfig& c, const std::string& v) -> std::string {
                   if (v == "vertical_then_real")
                     c.contour.shape = ContourSpec::Shape::vertical_then_real;
                   else if (v == "straight_line")
                     c.contour.shape = ContourSpec::Shape::straight_line;
                   else
                     return "shape must be vertical_then_real or straight_line, got '" + v + "'";
                   return {};
                 }});
    k.push_back(
      real_key("contour", "max_step", [](RunConfig& c) -> double& { return c.contour.max_step; }));
    k.push_back(real_key("contour", "branch_guard_radius",
                         [](RunConfig& c) -> double& { return c.contour.branch_guard_radius; }));
    k.push_back(
      real_key("contour", "rel_tol", [](RunConfig& c) -> double& { return c.contour.rel_tol; }));

    k.push_back(count_key("trajectories", "n_realizations",
                          [](RunConfig& c) -> std::size_t& { return c.n_realizations; }));
    k.push_back(
      count_key("trajectories", "n_x_grid", [](RunConfig& c) -> std::size_t& { return c.n_x_grid; }));
    k.push_back(real_key("trajectories", "x_grid_sigmas",
                         [](RunConfig& c) -> double& { return c.x_grid_sigmas; }));

    k.push_back(real_key("phase_space", "x_i", [](RunConfig& c) -> double& { return c.x_i; }));

    k.push_back(
      count_key("tunnel_scan", "n_points", [](RunConfig& c) -> std::size_t& { return c.n_points; }));

    k.push_back({"ptot_scan", "r_list",
                 [](RunConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.r_list.size(); ++i)
                     s += (i ? ", " : "") + format_double(c.r_list[i]);
                   return s;
                 },
                 [](RunConfig& c, const std::string& v) -> std::string {
                   std::vector<double> out;
                   std::stringstream ss(v);
                   std::string item;
                   while (std::getline(ss, item, ',')) {
                     const auto d = parse_double(trim(item));
                     if (!d)
                       return "r_list: expected comma-separated numbers, got '" + v + "'";
                     out.push_back(*d);
                   }
                   c.r_list = std::move(out);
                   return {};
                 }});

    k.push_back(count_key("exit_trajectories", "n_levels",
                          [](RunConfig& c) -> std::size_t& { return c.n_levels; }));
    k.push_back(count_key("exit_trajectories", "n_samples",
                          [](RunConfig& c) -> std::size_t& { return c.n_exit_samples; }));
    k.push_back(real_key("exit_trajectories", "t_span",
                         [](RunConfig& c) -> double& { return c.exit_t_span; }));
    return k;
  }();
  return table;
}

const Key* find_key(const std::string& section, const std::string& name)
{
  for (const Key& k : keys())
    if (k.section == section && k.name == name)
      return &k;
  return nullptr;
}

bool is_section(const std::string& name)
{
  for (const Key& k : keys())
    if (!k.section.empty() && k.section == name)
      return true;
  return false;
}

// Line of `name` inside `section` in the raw text, for error messages.
int locate(const std::string& text, const std::string& section, const std::string& name)
{
  std::istringstream in(text);
  std::string line;
  std::string current;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';')
      continue;
    if (t == name)
      return n;
    if (t.front() == '[' && t.back() == ']') {
      current = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (current == section && trim(t.substr(0, eq)) == name)
      return n;
  }
  return 0;
}

} // namespace

std::string to_string(Mode m)
{
  switch (m) {
  case Mode::trajectories: return "trajectories";
  case Mode::field_phase_space: return "field_phase_space";
  case Mode::tunnel_scan: return "tunnel_scan";
  case Mode::ptot_scan: return "ptot_scan";
  case Mode::exit_trajectories: return "exit_trajectories";
  }
  return "?";
}

Mode mode_from_string(const std::string& s)
{
  for (Mode m : {Mode::trajectories, Mode::field_phase_space, Mode::tunnel_scan, Mode::ptot_scan,
                 Mode::exit_trajectories})
    if (to_string(m) == s)
      return m;
  throw ValidationError("unknown mode '" + s + "'");
}

void RunConfig::validate() const
{
  squeezing.validate();
  barrier.validate();
  quadrature.validate();
  contour.validate();
  if (!std::isfinite(t_i))
    throw ValidationError("t_i finite");
  if (!(t_span > 0.0) || !std::isfinite(t_span))
    throw ValidationError("t_span > 0");
  if (n_time_samples < 2)
    throw ValidationError("n_time_samples >= 2");
  if (n_realizations < 1)
    throw ValidationError("n_realizations >= 1");
  if (n_x_grid < 2)
    throw ValidationError("n_x_grid >= 2");
  if (!(x_grid_sigmas > 0.0) || !std::isfinite(x_grid_sigmas))
    throw ValidationError("x_grid_sigmas > 0");
  if (!std::isfinite(x_i))
    throw ValidationError("x_i finite");
  if (n_points < 1)
    throw ValidationError("n_points >= 1");
  if (r_list.empty())
    throw ValidationError("r_list non-empty");
  for (double r : r_list)
    if (!(r >= 0.0) || !std::isfinite(r))
      throw ValidationError("r >= 0");
  if (n_levels < 1 || n_levels > 20)
    throw ValidationError("1 <= n_levels <= 20");
  if (n_exit_samples < 2)
    throw ValidationError("exit n_samples >= 2");
  if (!(exit_t_span > 0.0) || !std::isfinite(exit_t_span))
    throw ValidationError("exit t_span > 0");
  if (output_dir.empty())
    throw ValidationError("output_dir non-empty");
}

RunConfig parse_config(const std::string& text)
{
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message(), static_cast<int>(e.line()));
  }

  RunConfig c;
  auto apply = [&](const std::string& section, const std::string& name, const std::string& value) {
    const Key* k = find_key(section, name);
    const int line = locate(text, section, name);
    const std::string where = section.empty() ? name : section + "." + name;
    if (!k)
      throw ParseError("unknown key '" + where + "'", line);
    const std::string err = k->set(c, trim(value));
    if (!err.empty())
      throw ParseError(where + ": " + err, line);
  };

  for (const auto& [name, node] : tree) {
    if (!node.empty() || is_section(name)) {
      if (!is_section(name))
        throw ParseError("unknown section '[" + name + "]'", locate(text, "", "[" + name + "]"));
      for (const auto& [key, leaf] : node)
        apply(name, key, leaf.data());
    } else {
      apply("", name, node.data());
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw ParseError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const RunConfig& c)
{
  RunConfig copy = c;
  std::ostringstream out;
  std::string section = "";
  for (const Key& k : keys()) {
    if (k.section != section) {
      section = k.section;
      out << "\n[" << section << "]\n";
    }
    out << k.name << " = " << k.get(copy) << "\n";
  }
  return out.str();
}

std::string config_hash(const RunConfig& c)
{
  RunConfig h = c;
  h.output_dir = "out";
  h.workers = 0;
  return sha256_hex(emit_config(h));
}

void apply_environment(RunConfig& c)
{
  if (const char* out = std::getenv("BSV_TUNNEL_OUT"); out && *out)
    c.output_dir = out;
  if (const char* w = std::getenv("BSV_TUNNEL_WORKERS"); w && *w) {
    const std::string s = w;
    unsigned long long n = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), n);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ValidationError("BSV_TUNNEL_WORKERS must be a non-negative integer");
    c.workers = static_cast<std::size_t>(n);
  }
}

std::size_t effective_workers(const RunConfig& c)
{
  if (c.workers > 0)
    return c.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace bsv
