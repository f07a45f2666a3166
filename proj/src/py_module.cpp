// Python bindings over the app layer: the same operations as the pmcdb tool.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pmcdb/app.hpp"
#include "pmcdb/error.hpp"

namespace py = pybind11;
using namespace pmcdb;

namespace {

// Raw pointers: the interpreter owns these for the life of the process.
PyObject* error_base = nullptr;
std::map<ErrorKind, PyObject*> error_types;

std::vector<std::string> display(const Record& r) {
  std::vector<std::string> out;
  for (const auto& e : r.elements) out.push_back(display_element(e));
  return out;
}

py::dict group_dict(const app::GroupStats& g) {
  py::dict d;
  d["field"] = g.key.field;
  d["group"] = to_string(g.key.group);
  d["elements"] = g.elements;
  d["tau"] = g.tau;
  d["il_size"] = g.il_size;
  return d;
}

app::ConnectOptions connect_options(const std::string& data, std::optional<std::string> key_file,
                                    const std::string& user, std::optional<std::uint64_t> seed,
                                    const std::string& transport, const std::string& sss,
                                    const std::string& iws, const std::string& rss) {
  app::ConnectOptions o;
  o.dir = data;
  if (key_file) o.key_file = *key_file;
  o.user = user;
  o.seed = seed;
  if (transport == "tcp") {
    o.transport = app::Transport::Tcp;
  } else if (transport != "inproc") {
    throw Error(ErrorKind::Parameter, "transport must be inproc or tcp");
  }
  o.sss = parse_address(sss);
  o.iws = parse_address(iws);
  o.rss = parse_address(rss);
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-cloud searchable encrypted database";

  error_base = PyErr_NewException("pmcdb._core.PmcdbError", nullptr, nullptr);
  m.attr("PmcdbError") = py::handle(error_base);
  const std::pair<ErrorKind, const char*> kinds[] = {
      {ErrorKind::Parameter, "ParameterError"}, {ErrorKind::Protocol, "ProtocolError"},
      {ErrorKind::Auth, "AuthError"},           {ErrorKind::Revoked, "RevokedError"},
      {ErrorKind::Io, "StoreIoError"},
  };
  for (const auto& [kind, name] : kinds) {
    PyObject* t = PyErr_NewException((std::string("pmcdb._core.") + name).c_str(), error_base, nullptr);
    m.attr(name) = py::handle(t);
    error_types[kind] = t;
  }
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      std::string msg = e.what();
      if (e.origin() != Role::User) msg = std::string(to_string(e.origin())) + ": " + msg;
      PyErr_SetString(error_types.at(e.kind()), msg.c_str());
    }
  });

  m.def(
      "init",
      [](const std::string& out, std::optional<std::string> csv, std::size_t generate,
         std::uint64_t distinct, std::size_t group_bits, std::optional<std::uint64_t> modulo,
         std::optional<std::string> group_map, std::size_t lambda, std::size_t elem_len,
         std::optional<std::string> key_file, std::optional<std::uint64_t> seed) {
        app::InitOptions o;
        o.out = out;
        if (csv) o.csv = *csv;
        o.gen_rows = generate;
        o.gen_distinct = distinct;
        o.group_bits = group_bits;
        o.modulo = modulo;
        if (group_map) o.group_map = *group_map;
        o.lambda = lambda;
        o.elem_len = elem_len;
        if (key_file) o.key_file = *key_file;
        o.seed = seed;
        app::InitResult r;
        {
          py::gil_scoped_release release;
          r = app::cmd_init(o);
        }
        py::dict d;
        d["rows"] = r.real_rows;
        d["records"] = r.records;
        d["dummies"] = r.sigma_max;
        d["groups"] = r.groups;
        d["columns"] = r.manifest.columns;
        d["warnings"] = r.warnings;
        d["key_file"] = r.key_file.string();
        return d;
      },
      py::arg("out"), py::kw_only(), py::arg("csv") = py::none(), py::arg("generate") = 0,
      py::arg("distinct") = 0, py::arg("group_bits") = 2, py::arg("modulo") = py::none(),
      py::arg("group_map") = py::none(), py::arg("lambda_") = 1, py::arg("elem_len") = 16,
      py::arg("key_file") = py::none(), py::arg("seed") = py::none(),
      "Encrypt a CSV table (or a generated integer table) into a new deployment directory.");

  py::class_<app::Session>(m, "Session")
      .def(py::init([](const std::string& data, std::optional<std::string> key_file,
                       const std::string& user, std::optional<std::uint64_t> seed,
                       const std::string& transport, const std::string& sss,
                       const std::string& iws, const std::string& rss) {
             return std::make_unique<app::Session>(
                 connect_options(data, key_file, user, seed, transport, sss, iws, rss));
           }),
           py::arg("data"), py::kw_only(),
           py::arg("key_file") = py::none(), py::arg("user") = "user",
           py::arg("seed") = py::none(), py::arg("transport") = "inproc",
           py::arg("sss") = "127.0.0.1:7301", py::arg("iws") = "127.0.0.1:7302",
           py::arg("rss") = "127.0.0.1:7303")
      .def_property_readonly("columns",
                             [](const app::Session& s) { return s.manifest().columns; })
      .def(
          "select",
          [](app::Session& s, const std::string& column, const std::string& value) {
            std::vector<Record> rows;
            {
              py::gil_scoped_release release;
              rows = s.select(column, value);
            }
            std::vector<std::vector<std::string>> out;
            for (const auto& r : rows) out.push_back(display(r));
            return out;
          },
          py::arg("column"), py::arg("value"), "Rows whose column equals value.")
      .def("insert", &app::Session::insert, py::arg("values"),
           py::call_guard<py::gil_scoped_release>(),
           "Insert one row; returns the ids of the row and its dummies.")
      .def("delete", &app::Session::remove, py::arg("column"), py::arg("value"),
           py::call_guard<py::gil_scoped_release>(), "Delete matching rows; returns the count.")
      .def("revoke", &app::Session::revoke, py::arg("user"),
           py::call_guard<py::gil_scoped_release>())
      .def("__enter__", [](app::Session& s) -> app::Session& { return s; })
      .def("__exit__", [](app::Session&, py::args) { return false; });

  m.def(
      "stats",
      [](const std::string& data, std::optional<std::string> key_file) {
        auto s = app::cmd_stats(data, key_file ? std::optional<std::filesystem::path>(*key_file)
                                               : std::nullopt);
        py::dict d;
        d["records"] = s.records;
        d["real"] = s.real;
        d["dummies"] = s.dummies;
        py::list groups;
        for (const auto& g : s.groups) groups.append(group_dict(g));
        d["groups"] = groups;
        return d;
      },
      py::arg("data"), py::kw_only(), py::arg("key_file") = py::none());

  m.def(
      "compact",
      [](const std::string& data, std::optional<std::string> key_file,
         std::optional<std::uint64_t> seed) {
        auto r = app::cmd_compact(
            data, key_file ? std::optional<std::filesystem::path>(*key_file) : std::nullopt, seed);
        py::dict d;
        d["nulled_slots"] = r.nulled_slots;
        d["removed_records"] = r.removed_records;
        return d;
      },
      py::arg("data"), py::kw_only(), py::arg("key_file") = py::none(),
      py::arg("seed") = py::none());

  m.def(
      "audit_json",
      [](const std::string& data, const std::string& kind, std::size_t trials,
         std::optional<std::string> key_file, std::optional<std::uint64_t> seed) {
        app::AuditOptions o;
        o.dir = data;
        if (key_file) o.key_file = *key_file;
        o.kind = app::parse_audit_kind(kind);
        o.trials = trials;
        o.seed = seed;
        py::gil_scoped_release release;
        return audit::to_json_lines(app::cmd_audit(o));
      },
      py::arg("data"), py::kw_only(), py::arg("kind") = "all", py::arg("trials") = 100,
      py::arg("key_file") = py::none(), py::arg("seed") = py::none(),
      "Run audits on a copy of the deployment; one JSON object per line.");

  py::class_<app::Server>(m, "Server")
      .def(py::init([](const std::string& role, std::optional<std::string> data,
                       const std::string& listen, std::optional<std::string> key_file) {
             return std::make_unique<app::Server>(
                 app::parse_role(role), data.value_or(""), parse_address(listen),
                 key_file ? std::optional<std::filesystem::path>(*key_file) : std::nullopt);
           }),
           py::arg("role"), py::kw_only(), py::arg("data") = py::none(),
           py::arg("listen") = "127.0.0.1:0", py::arg("key_file") = py::none())
      .def_property_readonly("port", &app::Server::port)
      .def("start", &app::Server::start)
      .def("stop", &app::Server::stop, py::call_guard<py::gil_scoped_release>());
}
