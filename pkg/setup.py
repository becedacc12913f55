from distutils.core import setup

setup(
    name='branchcut',
    version='0.0',
    description='densities and distribution functions of quadratic forms in normals by branch cut integration',
    author='mip',
    packages=['branchcut'],
)
