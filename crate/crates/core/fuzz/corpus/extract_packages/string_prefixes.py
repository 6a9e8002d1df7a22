s = f'{a!r:>{w}}' + b'\x00' + r'\d'
