#include "taskgrid/kernels/kernels.h"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace taskgrid::kernels {

#if !TASKGRID_HAVE_AVX2
const kernel_table* avx2_kernels() { return nullptr; }
#endif

std::string_view to_string(isa i) { return i == isa::avx2 ? "avx2" : "scalar"; }

bool supported(isa i) {
	switch(i) {
	case isa::scalar:
		return true;
	case isa::avx2:
#if TASKGRID_HAVE_AVX2
		return __builtin_cpu_supports("avx2") != 0;
#else
		return false;
#endif
	}
	return false;
}

const kernel_table& kernels_for(isa i) {
	if(!supported(i)) throw std::runtime_error("kernel variant '" + std::string(to_string(i)) + "' is not available on this machine");
	return i == isa::avx2 ? *avx2_kernels() : scalar_kernels();
}

const kernel_table& active() {
	static const kernel_table& chosen = [&]() -> const kernel_table& {
		if(const char* env = std::getenv("TASKGRID_ISA")) {
			const std::string_view want(env);
			if(want == "scalar") return scalar_kernels();
			if(want == "avx2") return kernels_for(isa::avx2);
			if(!want.empty() && want != "auto")
				throw std::runtime_error("TASKGRID_ISA must be scalar, avx2, or auto; got '" + std::string(want) + "'");
		}
		return supported(isa::avx2) ? *avx2_kernels() : scalar_kernels();
	}();
	return chosen;
}

} // namespace taskgrid::kernels
