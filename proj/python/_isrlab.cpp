#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "isrlab/analysis.hpp"
#include "isrlab/attack.hpp"
#include "isrlab/container.hpp"
#include "isrlab/crypto.hpp"
#include "isrlab/engine.hpp"
#include "isrlab/isa.hpp"
#include "isrlab/json_io.hpp"
#include "isrlab/program.hpp"

namespace py = pybind11;
using namespace isrlab;

namespace binding {

// Containers cross the boundary as bytes in the on-disk format, reports as
// JSON text; the Python side decodes both.
std::vector<std::uint8_t> to_vec(const py::bytes& b) {
  const std::string s = b;
  return {s.begin(), s.end()};
}

py::bytes to_bytes(const std::vector<std::uint8_t>& v) {
  return {reinterpret_cast<const char*>(v.data()), v.size()};
}

crypto::Key128 seed_from_hex(const std::string& hex) {
  return hex.empty() ? crypto::Key128{} : crypto::Key128::from_hex(hex);
}

py::bytes assemble(const std::string& source, Addr text_base) {
  return to_bytes(serialize(layout_image(parse_assembly(source), text_base)));
}

py::bytes encrypt(const py::bytes& image, const std::string& seed) {
  const auto img = parse_image(to_vec(image));
  return to_bytes(serialize(crypto::encrypt_image(img, crypto::gen_keys(img.cfg, seed_from_hex(seed)))));
}

std::string run(const py::bytes& container, std::uint64_t step_limit, std::uint64_t decrypt_cost,
                std::uint64_t switch_cost) {
  const auto c = parse_container(to_vec(container));
  py::gil_scoped_release unlocked;
  const auto r = std::holds_alternative<Image>(c)
                     ? exec::run_plaintext(std::get<Image>(c), std::get<Image>(c).entry, step_limit)
                     : exec::run_encrypted(std::get<crypto::EncryptedImage>(c), step_limit);
  return io::to_json(r, {decrypt_cost, switch_cost}).dump();
}

std::string attack(const py::bytes& eimage, const std::string& scenario, std::uint64_t seed,
                   std::uint64_t step_limit) {
  const auto e = parse_encrypted(to_vec(eimage));
  const auto sc = io::scenario_from_json(io::json::parse(scenario));
  py::gil_scoped_release unlocked;
  return io::to_json(attack::run_attack(e, sc, seed, step_limit)).dump();
}

std::vector<std::uint64_t> survival(const py::bytes& eimage, const std::string& kind, std::uint64_t trials,
                                    std::uint64_t seed, std::uint64_t step_limit) {
  const auto k = attack::kind_from_name(kind);
  if (!k) throw py::value_error("unknown attack kind: " + kind);
  const auto e = parse_encrypted(to_vec(eimage));
  py::gil_scoped_release unlocked;
  return attack::latencies(attack::survival_trials(e, *k, trials, seed, step_limit));
}

std::string analyze(const py::bytes& image, const py::bytes& eimage) {
  return io::to_json(analysis::diversification_report(parse_image(to_vec(image)), parse_encrypted(to_vec(eimage))))
      .dump();
}

std::string fit(const std::vector<std::uint64_t>& latencies, double p) {
  return io::to_json(analysis::fit_survival(latencies, p)).dump();
}

py::object decode(std::uint32_t word) {
  const auto r = isa::decode({word});
  if (const auto* i = std::get_if<isa::Instruction>(&r)) return py::str(isa::to_string(*i));
  return py::none();
}

}  // namespace binding

PYBIND11_MODULE(_isrlab, m) {
  m.doc() = "Encrypted-fetch ISA laboratory (native core)";

  py::register_exception<Error>(m, "IsrError", PyExc_ValueError);

  m.def("assemble", &binding::assemble, py::arg("source"), py::arg("text_base") = 0, "Assembly text -> image container bytes.");
  m.def("encrypt", &binding::encrypt, py::arg("image"), py::arg("seed") = "", "Image bytes -> encrypted container bytes.");
  m.def("run", &binding::run, py::arg("container"), py::arg("step_limit") = exec::kDefaultStepLimit,
        py::arg("decrypt_cost") = 0, py::arg("switch_cost") = 0);
  m.def("attack", &binding::attack, py::arg("eimage"), py::arg("scenario"), py::arg("seed") = 0,
        py::arg("step_limit") = exec::kDefaultStepLimit);
  m.def("survival", &binding::survival, py::arg("eimage"), py::arg("kind"), py::arg("trials"), py::arg("seed") = 0,
        py::arg("step_limit") = exec::kDefaultStepLimit, "Instructions-until-fault per randomised trial.");
  m.def("analyze", &binding::analyze, py::arg("image"), py::arg("eimage"));
  m.def("fit", &binding::fit, py::arg("latencies"), py::arg("p"));
  m.def("decode", &binding::decode, py::arg("word"), "Disassembly, or None for an illegal word.");
  m.def("is_legal", &isa::is_legal, py::arg("word"));
  m.def("legal_word_count", &isa::legal_word_count);
  m.def("exact_valid_decode_fraction", &isa::exact_valid_decode_fraction);
  m.def(
      "valid_decode_fraction",
      [](std::uint64_t n, std::uint64_t seed) { return isa::valid_decode_fraction(n, seed); }, py::arg("samples"),
      py::arg("seed"), py::call_guard<py::gil_scoped_release>());
}
