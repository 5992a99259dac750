"""标注图 XML 序列化包"""
