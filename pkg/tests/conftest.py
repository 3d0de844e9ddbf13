pytest_plugins = ['pytest_sagin']
