from .kernels import KernelFamily, KernelSpec, QuadratureGrid, ValidationReport
