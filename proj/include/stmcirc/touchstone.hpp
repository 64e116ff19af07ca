#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "stmcirc/core.hpp"
#include "stmcirc/io.hpp"
#include "stmcirc/sparams.hpp"

namespace stmcirc {

/// Touchstone v1 three-port file, real/imaginary format: "# Hz S RI R 50",
/// one row of the matrix per line, port order 1,2,3.
inline std::string touchstone_text(const SParameterSet& sp, double r_ohm = 50.0) {
    sp.validate();
    std::string out;
    out += "! 3-port scattering data\n";
    out += "# Hz S RI R " + format_g(r_ohm) + "\n";
    for (std::size_t i = 0; i < sp.size(); ++i) {
        const Mat3& s = sp.matrices[i];
        for (std::size_t r = 0; r < 3; ++r) {
            std::string line;
            if (r == 0) line += format_sig17(sp.frequencies[i] / kTwoPi);
            for (std::size_t c = 0; c < 3; ++c) {
                line += ' ';
                line += format_sig17(s(r, c).real());
                line += ' ';
                line += format_sig17(s(r, c).imag());
            }
            out += line;
            out += '\n';
        }
    }
    return out;
}

inline void write_touchstone(const std::string& path, const SParameterSet& sp,
                             double r_ohm = 50.0) {
    write_file_atomic(path, touchstone_text(sp, r_ohm));
}

inline SParameterSet read_touchstone(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_touchstone: cannot open " + path);

    double unit = 1e9;  // Touchstone default is GHz
    bool ri = false;
    SParameterSet sp;
    std::vector<double> nums;
    std::string line;
    while (std::getline(in, line)) {
        const auto bang = line.find('!');
        if (bang != std::string::npos) line.erase(bang);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first == "#") {
            std::string tok;
            while (ls >> tok) {
                if (tok == "HZ" || tok == "Hz" || tok == "hz") unit = 1.0;
                else if (tok == "KHZ" || tok == "kHz" || tok == "KHz") unit = 1e3;
                else if (tok == "MHZ" || tok == "MHz") unit = 1e6;
                else if (tok == "GHZ" || tok == "GHz") unit = 1e9;
                else if (tok == "RI") ri = true;
            }
            continue;
        }
        ls.clear();
        ls.str(line);
        double v;
        while (ls >> v) nums.push_back(v);
    }
    if (!ri) throw std::runtime_error("read_touchstone: only RI format supported");
    // each frequency block: 1 + 18 numbers
    if (nums.size() % 19 != 0) throw std::runtime_error("read_touchstone: malformed 3-port data");
    const std::size_t npts = nums.size() / 19;
    for (std::size_t i = 0; i < npts; ++i) {
        const double* b = nums.data() + 19 * i;
        sp.frequencies.push_back(b[0] * unit * kTwoPi);
        Mat3 s;
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c)
                s(r, c) = cplx(b[1 + 6 * r + 2 * c], b[2 + 6 * r + 2 * c]);
        sp.matrices.push_back(s);
    }
    sp.validate();
    return sp;
}

}  // namespace stmcirc
