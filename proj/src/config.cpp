#include "lumisplit/config.hpp"

#include <map>
#include <sstream>
#include <stdexcept>

#include "lumisplit/io.hpp"

namespace lumisplit {

void FitConfig::validate() const {
    if (iter0 >= iter2) throw std::invalid_argument("config: iter0 must be < iter2 (ACE fires inside stage 2)");
    if (n < 1) throw std::invalid_argument("config: n must be >= 1");
    if (epsilon <= 0.0 || epsilon >= 1.0) throw std::invalid_argument("config: epsilon must be in (0,1)");
    for (double w : {w0, w1, w2, w3, w4, w5, w6, w7})
        if (w < 0.0) throw std::invalid_argument("config: loss weights must be >= 0");
    if (c_sh != 1 && c_sh != 4 && c_sh != 9 && c_sh != 16 && c_sh != 25)
        throw std::invalid_argument("config: c_sh must be one of 1,4,9,16,25");
    if (image_size <= 0 || texture_size <= 0)
        throw std::invalid_argument("config: sizes must be positive");
}

std::string FitConfig::to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "w0=" << w0 << "\nw1=" << w1 << "\nw2=" << w2 << "\nw3=" << w3 << "\nw4=" << w4
       << "\nw5=" << w5 << "\nw6=" << w6 << "\nw7=" << w7 << "\niter0=" << iter0
       << "\niter1=" << iter1 << "\niter2=" << iter2 << "\niter3=" << iter3
       << "\nepsilon=" << epsilon << "\nn=" << n << "\nc_sh=" << c_sh
       << "\nimage_size=" << image_size << "\ntexture_size=" << texture_size
       << "\nseed=" << seed << "\nlr_coeffs=" << lr_coeffs << "\nlr_gamma=" << lr_gamma
       << "\nlr_fields=" << lr_fields << "\nlr_texture=" << lr_texture
       << "\nlr_stage3_light=" << lr_stage3_light << "\n";
    return os.str();
}

FitConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: malformed line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    FitConfig c;
    auto want = [&](const std::string& key) -> std::string {
        auto it = kv.find(key);
        if (it == kv.end()) throw std::invalid_argument("config: missing key '" + key + "'");
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    c.w0 = std::stod(want("w0"));
    c.w1 = std::stod(want("w1"));
    c.w2 = std::stod(want("w2"));
    c.w3 = std::stod(want("w3"));
    c.w4 = std::stod(want("w4"));
    c.w5 = std::stod(want("w5"));
    c.w6 = std::stod(want("w6"));
    c.w7 = std::stod(want("w7"));
    c.iter0 = std::stoi(want("iter0"));
    c.iter1 = std::stoi(want("iter1"));
    c.iter2 = std::stoi(want("iter2"));
    c.iter3 = std::stoi(want("iter3"));
    c.epsilon = std::stod(want("epsilon"));
    c.n = std::stoi(want("n"));
    c.c_sh = std::stoi(want("c_sh"));
    c.image_size = std::stoi(want("image_size"));
    c.texture_size = std::stoi(want("texture_size"));
    c.seed = std::stoull(want("seed"));
    c.lr_coeffs = std::stod(want("lr_coeffs"));
    c.lr_gamma = std::stod(want("lr_gamma"));
    c.lr_fields = std::stod(want("lr_fields"));
    c.lr_texture = std::stod(want("lr_texture"));
    c.lr_stage3_light = std::stod(want("lr_stage3_light"));
    if (!kv.empty())
        throw std::invalid_argument("config: unknown key '" + kv.begin()->first + "'");
    c.validate();
    return c;
}

FitConfig load_config(const std::string& path) {
    return parse_config(io::read_text_file(path));
}

}  // namespace lumisplit
