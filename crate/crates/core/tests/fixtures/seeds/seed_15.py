import numpy as np
matrix = np.eye(4)
scales = {'row0': 1.0, 'row1': 2.0, 'row2': 3.0, 'row3': 4.0}
index = 0
while index < 4:
    matrix[index] = matrix[index] * scales['row' + str(index)]
    index = index + 1
inverse = np.linalg.inv(matrix)
check = np.allclose(matrix @ inverse, np.eye(4), rtol=1e-05, atol=1e-08)
