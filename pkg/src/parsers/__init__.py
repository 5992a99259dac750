"""标注文件读取与图构建包"""
